// hyctc/hybrid_decoder.hpp

// Copyright 2026  The hyctc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Word-head decoding with character back-off at OOV tokens.
//
// The word lattice is decoded greedily. Only when that output contains the
// OOV token is the character lattice decoded, and each OOV is then replaced
// by the character-decoded word overlapping it most in time. Every other
// word passes through untouched.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hyctc/ctc.hpp"
#include "hyctc/lexicon_graph.hpp"
#include "hyctc/segments.hpp"
#include "hyctc/tokenizer.hpp"

namespace hyctc {

enum class CharDecodeMode { kConstrained, kMaxOutput };

struct HybridConfig {
  CharDecodeMode char_mode = CharDecodeMode::kConstrained;
  int beam_width = kDefaultBeamWidth;
};

struct OovEvent {
  WordSpan oov;
  std::optional<WordSpan> replacement;
  int overlap = 0;
};

struct SpliceResult {
  Transcript words;
  std::vector<WordSpan> spans;
  std::vector<OovEvent> events;
};

struct HybridResult {
  Transcript words;
  std::vector<WordSpan> word_spans;
  std::vector<OovEvent> oov_events;
  Transcript word_only;                    // word head output before splicing
  std::optional<std::vector<WordSpan>> char_spans;  // set only when consulted
};

/// Replaces each OOV span, left to right, by one character word. A char word
/// is used at most once. Preference: largest overlap, then earlier start,
/// then shorter word. Without any positive overlap the nearest midpoint
/// wins; with no char words left the literal OOV token stays.
inline SpliceResult SpliceOov(std::span<const WordSpan> word_spans, std::span<const WordSpan> char_spans) {
  SpliceResult out;
  std::vector<bool> used(char_spans.size(), false);
  for (const WordSpan& w : word_spans) {
    if (!w.is_oov()) {
      out.words.push_back(w.word);
      out.spans.push_back(w);
      continue;
    }
    int best = -1, best_overlap = 0;
    for (size_t i = 0; i < char_spans.size(); ++i) {
      if (used[i]) continue;
      const int ov = Overlap(w, char_spans[i]);
      if (ov == 0) continue;
      const auto& c = char_spans[i];
      if (best < 0 || ov > best_overlap ||
          (ov == best_overlap && (c.start < char_spans[best].start ||
                                  (c.start == char_spans[best].start && c.word.size() < char_spans[best].word.size())))) {
        best = static_cast<int>(i);
        best_overlap = ov;
      }
    }
    if (best < 0) {
      double best_dist = 0.0;
      for (size_t i = 0; i < char_spans.size(); ++i) {
        if (used[i]) continue;
        const double d = std::abs(char_spans[i].midpoint() - w.midpoint());
        if (best < 0 || d < best_dist) {  // earlier start wins distance ties
          best = static_cast<int>(i);
          best_dist = d;
        }
      }
    }
    OovEvent ev{w, std::nullopt, best_overlap};
    WordSpan final_span = w;
    if (best >= 0) {
      used[best] = true;
      ev.replacement = char_spans[best];
      final_span.word = char_spans[best].word;
    }
    out.words.push_back(final_span.word);
    out.spans.push_back(std::move(final_span));
    out.events.push_back(std::move(ev));
  }
  return out;
}

/// `char_decoder` maps the character lattice to word spans; it is invoked
/// only when the word head emits an OOV token.
template <typename CharDecoder>
HybridResult HybridDecode(const LogPosteriorLattice& word_lattice, const LogPosteriorLattice& char_lattice,
                          const WordVocab& vocab, CharDecoder&& char_decoder) {
  if (word_lattice.frames() != char_lattice.frames())
    throw Error(ErrorKind::kDimension, "word and character lattices have different frame counts");
  if (word_lattice.vocab_size() != vocab.size())
    throw Error(ErrorKind::kDimension, "word lattice does not match the vocabulary");

  const auto greedy = GreedyDecode(word_lattice);
  const auto segs = ExtractSegments(greedy.alignment, word_lattice.blank_id());
  const auto spans = WordSpansFromWords(segs, vocab);

  HybridResult r;
  r.word_only = WordsOf(spans);
  const bool has_oov = std::any_of(spans.begin(), spans.end(), [](const WordSpan& s) { return s.is_oov(); });
  if (!has_oov) {
    r.words = r.word_only;
    r.word_spans = spans;
    return r;
  }
  std::vector<WordSpan> char_spans = char_decoder(char_lattice);
  auto spliced = SpliceOov(spans, char_spans);
  r.words = std::move(spliced.words);
  r.word_spans = std::move(spliced.spans);
  r.oov_events = std::move(spliced.events);
  r.char_spans = std::move(char_spans);
  return r;
}

inline std::vector<WordSpan> DecodeChars(const LogPosteriorLattice& char_lattice, const CharTrie& trie,
                                         const HybridConfig& config) {
  if (config.char_mode == CharDecodeMode::kMaxOutput) return MaxOutputDecode(char_lattice, trie.charset());
  return ConstrainedDecode(char_lattice, trie, config.beam_width).words;
}

inline HybridResult HybridDecode(const LogPosteriorLattice& word_lattice, const LogPosteriorLattice& char_lattice,
                                 const CharTrie& trie, const WordVocab& vocab, const HybridConfig& config = {}) {
  return HybridDecode(word_lattice, char_lattice, vocab,
                      [&](const LogPosteriorLattice& lat) { return DecodeChars(lat, trie, config); });
}

}  // namespace hyctc
