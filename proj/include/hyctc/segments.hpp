// hyctc/segments.hpp

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

// Frame spans for CTC output tokens. A token owns its spike run plus every
// blank frame since the previous token's run (or the utterance start).
// Blanks after the final token belong to nothing.

#pragma once

#include <algorithm>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hyctc/ctc.hpp"
#include "hyctc/tokenizer.hpp"

namespace hyctc {

struct TokenSegment {
  TokenId token = 0;
  int start = 0;  // inclusive
  int end = 0;    // inclusive

  int length() const { return end - start + 1; }
  bool operator==(const TokenSegment&) const = default;
};

struct WordSpan {
  std::string word;
  int start = 0;
  int end = 0;

  int length() const { return end - start + 1; }
  double midpoint() const { return 0.5 * (start + end); }
  bool is_oov() const { return word == kOovToken; }
  bool operator==(const WordSpan&) const = default;
};

inline std::vector<TokenSegment> ExtractSegments(std::span<const TokenId> alignment, TokenId blank_id) {
  std::vector<TokenSegment> segs;
  int seg_start = 0;
  const int T = static_cast<int>(alignment.size());
  for (int t = 0; t < T;) {
    const TokenId tok = alignment[t];
    if (tok == blank_id) {
      ++t;
      continue;
    }
    int run_end = t;
    while (run_end + 1 < T && alignment[run_end + 1] == tok) ++run_end;
    segs.push_back({tok, seg_start, run_end});
    seg_start = run_end + 1;
    t = run_end + 1;
  }
  return segs;
}

/// Merges runs of non-space character segments into word spans. Space
/// segments only delimit; their frames belong to no word.
inline std::vector<WordSpan> WordSpansFromChars(std::span<const TokenSegment> chars, const CharSet& charset) {
  std::vector<WordSpan> spans;
  std::vector<TokenId> units;
  int start = 0, end = 0;
  auto flush = [&] {
    if (units.empty()) return;
    spans.push_back({charset.DecodeWord(units), start, end});
    units.clear();
  };
  for (const auto& seg : chars) {
    if (seg.token == charset.space_id()) {
      flush();
      continue;
    }
    if (units.empty()) start = seg.start;
    units.push_back(seg.token);
    end = seg.end;
  }
  flush();
  return spans;
}

/// Word spans for a word-head alignment: one span per token segment.
inline std::vector<WordSpan> WordSpansFromWords(std::span<const TokenSegment> segs, const WordVocab& vocab) {
  std::vector<WordSpan> spans;
  spans.reserve(segs.size());
  for (const auto& s : segs) spans.push_back({vocab.Word(s.token), s.start, s.end});
  return spans;
}

/// Frames shared by two inclusive ranges.
inline int Overlap(const WordSpan& a, const WordSpan& b) {
  return std::max(0, std::min(a.end, b.end) - std::max(a.start, b.start) + 1);
}

inline Transcript WordsOf(std::span<const WordSpan> spans) {
  Transcript out;
  out.reserve(spans.size());
  for (const auto& s : spans) out.push_back(s.word);
  return out;
}

/// Diagnostic dump, `token<TAB>start<TAB>end` per line.
inline void WriteSegmentsTsv(std::ostream& os, std::span<const TokenSegment> segs) {
  for (const auto& s : segs) os << s.token << '\t' << s.start << '\t' << s.end << '\n';
}

inline void WriteWordSpansTsv(std::ostream& os, std::span<const WordSpan> spans) {
  for (const auto& s : spans) os << s.word << '\t' << s.start << '\t' << s.end << '\n';
}

}  // namespace hyctc
