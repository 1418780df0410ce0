// samples/hybrid_decode_demo.cpp

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

// Hybrid decoding on hand-built lattices: the word head emits <OOV> for an
// unseen name, the character head spells it, and the splice puts it back.
// A hot-word only decodes once it joins the valid-word list.

#include <cmath>
#include <iostream>
#include <string>
#include <vector>

#include "hyctc/hyctc.hpp"

using namespace hyctc;

namespace {

// One symbol per frame with probability 0.9; the rest spread evenly.
LogPosteriorLattice Peaked(const std::vector<TokenId>& symbols, int V) {
  Matrix m(static_cast<Eigen::Index>(symbols.size()), V);
  for (size_t t = 0; t < symbols.size(); ++t)
    for (int v = 0; v < V; ++v) m(t, v) = std::log(v == symbols[t] ? 0.9 : 0.1 / (V - 1));
  return LogPosteriorLattice(m, 0);
}

// Character lattice spelling `text` one unit per frame; '_' is blank.
LogPosteriorLattice Spell(const CharSet& cs, const std::string& text) {
  std::vector<TokenId> ids;
  for (char c : text) {
    if (c == '_') ids.push_back(cs.blank_id());
    else if (c == ' ') ids.push_back(cs.space_id());
    else ids.push_back(cs.EncodeWord(std::string(1, c))[0]);
  }
  return Peaked(ids, cs.size());
}

void Show(const std::string& label, const HybridResult& r) {
  std::cout << label << "\n  word-only: " << JoinTranscript(r.word_only) << "\n  hybrid:    " << JoinTranscript(r.words)
            << '\n';
  for (const auto& e : r.oov_events)
    std::cout << "  <OOV> frames " << e.oov.start << "-" << e.oov.end << " -> "
              << (e.replacement ? e.replacement->word : std::string(kOovToken)) << " (overlap " << e.overlap
              << ")\n";
}

}  // namespace

int main() {
  const auto cs = CharSet::Cs28();
  const auto vocab = WordVocab::Build(std::vector<Transcript>{{"play", "artist"}}, 1);
  const std::string chars = "play artist ratatat_";
  std::vector<TokenId> words(chars.size(), WordVocab::kBlankId);
  words[3] = vocab.Lookup("play");
  words[10] = vocab.Lookup("artist");
  words[18] = WordVocab::kOovId;
  const auto word_lat = Peaked(words, vocab.size());
  const auto char_lat = Spell(cs, chars);

  // "ratatat" is a rare training word: in the valid-word list, not in the
  // word vocabulary.
  const auto trie = BuildTrie(std::vector<std::string>{"play", "artist", "ratatat"}, cs);
  Show("rare word", HybridDecode(word_lat, char_lat, trie, vocab));

  // A hot-word never seen in training.
  const std::string hot_chars = "play artist margera_";
  const auto hot_lat = Spell(cs, hot_chars);
  Show("hot-word, before add_words", HybridDecode(word_lat, hot_lat, trie, vocab));
  const auto extended = AddWords(trie, std::vector<std::string>{"margera"});
  Show("hot-word, after add_words", HybridDecode(word_lat, hot_lat, extended, vocab));
  return 0;
}
