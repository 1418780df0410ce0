// tests/test_util.hpp

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

// Random instance generators and independent reference implementations.
// Nothing here calls into the code paths it is used to check.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "hyctc/hyctc.hpp"

namespace hyctc::testing {

inline Matrix RandomLogits(std::mt19937_64& rng, int T, int V, double scale = 2.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(T, V);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

inline LogPosteriorLattice RandomLattice(std::mt19937_64& rng, int T, int V, TokenId blank = 0, double scale = 2.0) {
  return LogPosteriorLattice::FromLogits(RandomLogits(rng, T, V, scale), blank);
}

/// Lattice whose row t puts mass `peak` on symbols[t] and spreads the rest.
inline LogPosteriorLattice PeakedLattice(const std::vector<TokenId>& symbols, int V, double peak = 0.9) {
  const int T = static_cast<int>(symbols.size());
  Matrix m(T, V);
  for (int t = 0; t < T; ++t)
    for (int v = 0; v < V; ++v) m(t, v) = std::log(v == symbols[t] ? peak : (1.0 - peak) / (V - 1));
  return LogPosteriorLattice(m, 0);
}

inline LabelSequence RandomLabels(std::mt19937_64& rng, int max_len, int V, TokenId blank = 0) {
  const int U = std::uniform_int_distribution<int>(0, max_len)(rng);
  LabelSequence l;
  std::uniform_int_distribution<int> tok(0, V - 1);
  while (static_cast<int>(l.size()) < U) {
    const int t = tok(rng);
    if (t != blank) l.push_back(t);
  }
  return l;
}

/// Straight-from-the-definition CTC mapping, written independently of
/// Collapse(): drop a frame if it repeats the previous frame, then drop blanks.
inline LabelSequence ReferenceCollapse(const std::vector<TokenId>& path, TokenId blank) {
  std::vector<TokenId> dedup;
  for (size_t i = 0; i < path.size(); ++i)
    if (i == 0 || path[i] != path[i - 1]) dedup.push_back(path[i]);
  LabelSequence out;
  std::copy_if(dedup.begin(), dedup.end(), std::back_inserter(out), [&](TokenId t) { return t != blank; });
  return out;
}

// Owner of each frame straight from the rule: a spike frame belongs to its
// own run; a blank frame belongs to the next spike run, if there is one.
inline std::vector<int> ReferenceOwners(const std::vector<TokenId>& align, TokenId blank) {
  const int T = static_cast<int>(align.size());
  std::vector<int> run_id(T, -1);
  int runs = -1;
  for (int t = 0; t < T; ++t)
    if (align[t] != blank) run_id[t] = (t > 0 && align[t - 1] == align[t]) ? runs : ++runs;
  std::vector<int> owner(T, -1);
  int next = -1;
  for (int t = T - 1; t >= 0; --t) {
    if (run_id[t] >= 0) next = run_id[t];
    owner[t] = next;
  }
  return owner;
}

/// Calls fn(path) for every path over `alphabet` of length T.
inline void ForEachPath(const std::vector<TokenId>& alphabet, int T, const std::function<void(const Path&)>& fn) {
  std::vector<size_t> idx(T, 0);
  Path path(T, alphabet[0]);
  while (true) {
    fn(path);
    int t = T - 1;
    while (t >= 0 && ++idx[t] == alphabet.size()) {
      idx[t] = 0;
      path[t] = alphabet[0];
      --t;
    }
    if (t < 0) return;
    path[t] = alphabet[idx[t]];
  }
}

struct LexiconParse {
  bool valid = false;
  std::vector<std::string> words;
};

/// Best parse of a collapsed unit sequence as lexicon words: spaces split
/// chunks, each chunk must be a concatenation of lexicon words. Among
/// parses, fewest words and then lexicographically smallest wins.
inline LexiconParse ParseUnits(const LabelSequence& units, const std::vector<std::vector<TokenId>>& lex_units,
                               const std::vector<std::string>& lex_words, TokenId space) {
  LexiconParse result{true, {}};
  std::vector<TokenId> chunk;
  auto parse_chunk = [&](const std::vector<TokenId>& c) -> LexiconParse {
    // best[i]: best parse of the prefix of length i.
    const size_t n = c.size();
    std::vector<LexiconParse> best(n + 1);
    best[0].valid = true;
    for (size_t i = 0; i < n; ++i) {
      if (!best[i].valid) continue;
      for (size_t w = 0; w < lex_units.size(); ++w) {
        const auto& u = lex_units[w];
        if (i + u.size() > n || !std::equal(u.begin(), u.end(), c.begin() + i)) continue;
        LexiconParse cand = best[i];
        cand.words.push_back(lex_words[w]);
        auto& slot = best[i + u.size()];
        if (!slot.valid || cand.words.size() < slot.words.size() ||
            (cand.words.size() == slot.words.size() && cand.words < slot.words))
          slot = cand;
      }
    }
    return best[n];
  };
  auto flush = [&] {
    if (chunk.empty()) return true;
    auto p = parse_chunk(chunk);
    chunk.clear();
    if (!p.valid) return false;
    result.words.insert(result.words.end(), p.words.begin(), p.words.end());
    return true;
  };
  for (TokenId u : units) {
    if (u == space) {
      if (!flush()) return {};
    } else {
      chunk.push_back(u);
    }
  }
  if (!flush()) return {};
  return result;
}

struct ExhaustiveDecode {
  double score = -std::numeric_limits<double>::infinity();
  std::vector<std::string> words;
};

/// Scores every path over {blank, space, lexicon units}; paths through any
/// other unit cannot spell lexicon words, so the restriction is exact.
inline ExhaustiveDecode ExhaustiveLexiconDecode(const LogPosteriorLattice& lat, const CharSet& cs,
                                                const std::vector<std::string>& lexicon) {
  std::vector<std::vector<TokenId>> lex_units;
  std::vector<TokenId> alphabet{cs.blank_id(), cs.space_id()};
  for (const auto& w : lexicon) {
    lex_units.push_back(cs.EncodeWord(w));
    for (TokenId u : lex_units.back())
      if (std::find(alphabet.begin(), alphabet.end(), u) == alphabet.end()) alphabet.push_back(u);
  }
  ExhaustiveDecode best;
  ForEachPath(alphabet, lat.frames(), [&](const Path& path) {
    double s = 0.0;
    for (int t = 0; t < lat.frames(); ++t) s += lat(t, path[t]);
    if (s < best.score) return;
    const auto parse = ParseUnits(ReferenceCollapse(path, cs.blank_id()), lex_units, lexicon, cs.space_id());
    if (!parse.valid) return;
    if (s > best.score || parse.words.size() < best.words.size() ||
        (parse.words.size() == best.words.size() && parse.words < best.words)) {
      best.score = s;
      best.words = parse.words;
    }
  });
  return best;
}

/// Minimum edit distance by exhaustive recursion over alignments.
inline int BruteForceEditDistance(const Transcript& ref, const Transcript& hyp, size_t i = 0, size_t j = 0) {
  if (i == ref.size()) return static_cast<int>(hyp.size() - j);
  if (j == hyp.size()) return static_cast<int>(ref.size() - i);
  const int diag = BruteForceEditDistance(ref, hyp, i + 1, j + 1) + (ref[i] == hyp[j] ? 0 : 1);
  const int ins = BruteForceEditDistance(ref, hyp, i, j + 1) + 1;
  const int del = BruteForceEditDistance(ref, hyp, i + 1, j) + 1;
  return std::min({diag, ins, del});
}

}  // namespace hyctc::testing
