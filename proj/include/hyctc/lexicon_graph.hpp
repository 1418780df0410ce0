// hyctc/lexicon_graph.hpp

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

// Character-lattice decoding: unconstrained max output, and a frame
// synchronous Viterbi beam search restricted to words of a prefix trie.

#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hyctc/ctc.hpp"
#include "hyctc/segments.hpp"
#include "hyctc/tokenizer.hpp"

namespace hyctc {

/// Prefix graph over unit sequences of a word list. Immutable once built;
/// WithWords returns an extended copy.
class CharTrie {
 public:
  static constexpr int kRoot = 0;

  CharTrie(const CharSet& charset, std::span<const std::string> lexicon) : charset_(charset) {
    nodes_.emplace_back(charset_.size());
    Insert(lexicon);
  }

  CharTrie WithWords(std::span<const std::string> words) const {
    CharTrie out = *this;
    out.Insert(words);
    return out;
  }

  int Child(int node, TokenId unit) const { return nodes_[node].children[unit]; }
  bool IsTerminal(int node) const { return !nodes_[node].word.empty(); }
  /// Fewest units needed from `node` to finish a word; 0 at the root and at
  /// terminals, a large value where no word can be finished.
  int UnitsToFinish(int node) const { return nodes_[node].to_finish; }
  const std::string& WordAt(int node) const { return nodes_[node].word; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_words() const { return static_cast<int>(words_.size()); }
  const CharSet& charset() const { return charset_; }
  const std::set<std::string>& words() const { return words_; }

  bool Accepts(std::string_view word) const {
    if (!charset_.CanEncode(word)) return false;
    int node = kRoot;
    for (TokenId u : charset_.EncodeWord(word)) {
      node = Child(node, u);
      if (node < 0) return false;
    }
    return IsTerminal(node);
  }

 private:
  struct Node {
    explicit Node(int vocab) : children(vocab, -1) {}
    std::vector<int> children;
    std::string word;  // non-empty on terminal nodes
    int to_finish = 0;
  };

  void Insert(std::span<const std::string> lexicon) {
    for (const auto& raw : lexicon) {
      const std::string w = NormalizeWord(raw);
      const auto units = charset_.EncodeWord(w);  // throws, naming the word
      int node = kRoot;
      for (TokenId u : units) {
        if (u == charset_.space_id() || u == charset_.blank_id())
          throw Error(ErrorKind::kInvalidInput, "word '" + raw + "' encodes to a space or blank unit");
        int next = nodes_[node].children[u];
        if (next < 0) {
          next = static_cast<int>(nodes_.size());
          nodes_[node].children[u] = next;
          nodes_.emplace_back(charset_.size());
        }
        node = next;
      }
      nodes_[node].word = w;
      words_.insert(w);
    }
    // Children always have larger indices than their parent.
    for (int n = static_cast<int>(nodes_.size()) - 1; n >= 0; --n) {
      Node& node = nodes_[n];
      if (n == kRoot || !node.word.empty()) {
        node.to_finish = 0;
        continue;
      }
      node.to_finish = kUnreachable;
      for (int c : node.children)
        if (c >= 0) node.to_finish = std::min(node.to_finish, nodes_[c].to_finish + 1);
    }
  }

  static constexpr int kUnreachable = 1 << 30;

  CharSet charset_;
  std::vector<Node> nodes_;
  std::set<std::string> words_;
};

inline CharTrie BuildTrie(std::span<const std::string> lexicon, const CharSet& charset) {
  return CharTrie(charset, lexicon);
}

inline CharTrie AddWords(const CharTrie& trie, std::span<const std::string> words) {
  return trie.WithWords(words);
}

namespace internal {

inline void CheckCharLattice(const LogPosteriorLattice& lattice, const CharSet& charset) {
  if (lattice.vocab_size() != charset.size() || lattice.blank_id() != charset.blank_id())
    throw Error(ErrorKind::kDimension, "character lattice does not match the charset (" +
                                           std::to_string(lattice.vocab_size()) + " vs " +
                                           std::to_string(charset.size()) + " units)");
}

}  // namespace internal

/// Per-frame argmax characters collapsed into words; no lexicon check.
inline std::vector<WordSpan> MaxOutputDecode(const LogPosteriorLattice& lattice, const CharSet& charset) {
  internal::CheckCharLattice(lattice, charset);
  const auto greedy = GreedyDecode(lattice);
  const auto segs = ExtractSegments(greedy.alignment, lattice.blank_id());
  return WordSpansFromChars(segs, charset);
}

struct ConstrainedDecodeResult {
  std::vector<WordSpan> words;
  double score = kLogZero;  // summed log posterior of the winning alignment
  bool found = false;
  std::string diagnostic;
};

inline constexpr int kDefaultBeamWidth = 64;

namespace internal {

// Completed words as a shared persistent list, newest first.
struct WordLink {
  WordSpan span;
  std::shared_ptr<const WordLink> prev;
};

struct BeamHyp {
  int node = CharTrie::kRoot;
  TokenId last = 0;         // symbol emitted at the previous frame
  double score = 0.0;
  std::shared_ptr<const WordLink> words;
  int num_words = 0;
  int word_start = 0;       // first frame of the pending word's segment
  int last_nonblank = -1;   // most recent frame with a non-blank symbol
};

inline std::vector<WordSpan> Unroll(const std::shared_ptr<const WordLink>& head) {
  std::vector<WordSpan> out;
  for (auto p = head.get(); p; p = p->prev.get()) out.push_back(p->span);
  std::reverse(out.begin(), out.end());
  return out;
}

inline bool WordTextLess(const std::vector<WordSpan>& a, const std::vector<WordSpan>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(),
                                      [](const WordSpan& x, const WordSpan& y) { return x.word < y.word; });
}

inline bool WordsLess(const BeamHyp& a, const BeamHyp& b) {
  if (a.words == b.words) return false;
  return WordTextLess(Unroll(a.words), Unroll(b.words));
}

// Higher score, then fewer words, then lexicographically smaller words.
inline bool Better(const BeamHyp& a, const BeamHyp& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.num_words != b.num_words) return a.num_words < b.num_words;
  return WordsLess(a, b);
}

inline void PushWord(BeamHyp& h, const CharTrie& trie) {
  h.words = std::make_shared<const WordLink>(
      WordLink{{trie.WordAt(h.node), h.word_start, h.last_nonblank}, h.words});
  ++h.num_words;
}

// One pass of Viterbi beam search keeping at most beam_width states per frame.
inline ConstrainedDecodeResult BeamPass(const LogPosteriorLattice& lattice, const CharTrie& trie, int beam_width) {
  const CharSet& cs = trie.charset();
  const int T = lattice.frames();
  const int V = lattice.vocab_size();
  const TokenId blank = cs.blank_id();
  const TokenId space = cs.space_id();

  std::vector<BeamHyp> beam(1);
  beam[0].last = blank;
  std::vector<BeamHyp> next;
  std::unordered_map<std::int64_t, size_t> slot;

  for (int t = 0; t < T; ++t) {
    next.clear();
    slot.clear();
    auto offer = [&](BeamHyp&& h) {
      const std::int64_t key = static_cast<std::int64_t>(h.node) * V + h.last;
      auto [it, inserted] = slot.try_emplace(key, next.size());
      if (inserted) next.push_back(std::move(h));
      else if (internal::Better(h, next[it->second])) next[it->second] = std::move(h);
    };

    for (const BeamHyp& h : beam) {
      for (TokenId s = 0; s < V; ++s) {
        const double lp = lattice(t, s);
        if (lp == kLogZero) continue;
        if (s == blank) {
          BeamHyp n = h;
          n.last = blank;
          n.score += lp;
          offer(std::move(n));
          continue;
        }
        if (s == h.last) {  // same token continues
          BeamHyp n = h;
          n.score += lp;
          n.last_nonblank = t;
          offer(std::move(n));
          continue;
        }
        const bool at_root = h.node == CharTrie::kRoot;
        const bool terminal = !at_root && trie.IsTerminal(h.node);
        if (s == space) {
          if (!at_root && !terminal) continue;
          BeamHyp n = h;
          if (terminal) internal::PushWord(n, trie);
          n.node = CharTrie::kRoot;
          n.last = space;
          n.score += lp;
          n.last_nonblank = t;
          offer(std::move(n));
          continue;
        }
        if (const int child = trie.Child(h.node, s); child >= 0) {
          BeamHyp n = h;
          if (at_root) n.word_start = h.last_nonblank + 1;
          n.node = child;
          n.last = s;
          n.score += lp;
          n.last_nonblank = t;
          offer(std::move(n));
        }
        if (terminal) {
          if (const int child = trie.Child(CharTrie::kRoot, s); child >= 0) {
            BeamHyp n = h;
            internal::PushWord(n, trie);
            n.word_start = h.last_nonblank + 1;
            n.node = child;
            n.last = s;
            n.score += lp;
            n.last_nonblank = t;
            offer(std::move(n));
          }
        }
      }
    }

    // A pending word that needs more units than frames remain is a dead end;
    // dropping it keeps it from crowding out hypotheses that can finish.
    const int frames_left = T - 1 - t;
    std::erase_if(next, [&](const BeamHyp& h) { return trie.UnitsToFinish(h.node) > frames_left; });
    if (static_cast<int>(next.size()) > beam_width) {
      std::sort(next.begin(), next.end(), [V](const BeamHyp& a, const BeamHyp& b) {
        if (internal::Better(a, b)) return true;
        if (internal::Better(b, a)) return false;
        return static_cast<std::int64_t>(a.node) * V + a.last < static_cast<std::int64_t>(b.node) * V + b.last;
      });
      next.resize(beam_width);
    }
    beam.swap(next);
  }

  ConstrainedDecodeResult result;
  const BeamHyp* best = nullptr;
  std::vector<BeamHyp> finals;
  for (const BeamHyp& h : beam) {
    if (h.node == CharTrie::kRoot) {
      finals.push_back(h);
    } else if (trie.IsTerminal(h.node)) {
      BeamHyp c = h;
      internal::PushWord(c, trie);
      finals.push_back(std::move(c));
    }
  }
  for (const BeamHyp& h : finals)
    if (!best || internal::Better(h, *best)) best = &h;
  if (!best) {
    result.diagnostic = "no-path: beam exhausted without a complete hypothesis";
    return result;
  }
  result.found = true;
  result.score = best->score;
  result.words = internal::Unroll(best->words);
  return result;
}

}  // namespace internal

/// Viterbi search over (trie node, previous symbol) states, scored by summed
/// per-frame log posteriors. A word ends at a terminal node followed either by
/// a space unit or by the first unit of the next word. Beam passes of width
/// 1, 2, 4, ... up to beam_width are run and the best complete hypothesis is
/// kept, so the result never worsens as beam_width grows.
inline ConstrainedDecodeResult ConstrainedDecode(const LogPosteriorLattice& lattice, const CharTrie& trie,
                                                 int beam_width = kDefaultBeamWidth) {
  internal::CheckCharLattice(lattice, trie.charset());
  if (beam_width < 1) throw Error(ErrorKind::kInvalidInput, "beam_width must be >= 1");
  ConstrainedDecodeResult best;
  for (int w = 1; w > 0 && w <= beam_width; w *= 2) {
    auto r = internal::BeamPass(lattice, trie, w);
    if (!r.found) {
      if (!best.found) best.diagnostic = std::move(r.diagnostic);
      continue;
    }
    const bool better = !best.found || r.score > best.score ||
                        (r.score == best.score && (r.words.size() < best.words.size() ||
                                                   (r.words.size() == best.words.size() &&
                                                    internal::WordTextLess(r.words, best.words))));
    if (better) best = std::move(r);
  }
  return best;
}

}  // namespace hyctc
