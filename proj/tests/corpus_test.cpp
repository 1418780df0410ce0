// tests/corpus_test.cpp

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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "hyctc/corpus.hpp"
#include "hyctc/tokenizer.hpp"

namespace hyctc {
namespace {

namespace fs = std::filesystem;

CorpusConfig SmallConfig() {
  CorpusConfig c;
  c.lexicon = {"play", "artist", "call", "music", "ratatat", "azusa"};
  c.oov_target_words = {"ratatat", "azusa"};
  c.rare_count = 2;
  c.hotwords = {"margera"};
  c.hotword_utterances = 4;
  c.train_utterances = 40;
  c.test_utterances = 30;
  c.test_oov_rate = 0.3;
  c.seed = 11;
  return c;
}

fs::path TempDir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("hyctc_corpus_test_" + name);
  fs::remove_all(p);
  return p;
}

void ExpectSameUtterances(const std::vector<Utterance>& a, const std::vector<Utterance>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, b[i].id);
    EXPECT_EQ(a[i].transcript, b[i].transcript);
    EXPECT_EQ(a[i].features, b[i].features);
  }
}

TEST(CorpusTest, SameSeedIsBitIdentical) {
  const auto a = GenerateCorpus(SmallConfig()), b = GenerateCorpus(SmallConfig());
  ExpectSameUtterances(a.train, b.train);
  ExpectSameUtterances(a.test, b.test);
  ExpectSameUtterances(a.hotword, b.hotword);
  auto other = SmallConfig();
  other.seed = 12;
  EXPECT_NE(GenerateCorpus(other).train[0].features, a.train[0].features);
}

TEST(CorpusTest, NoiselessRenderingIsPrototypeConcatenation) {
  CorpusConfig c = SmallConfig();
  c.noise = 0.0;
  c.min_frames_per_char = c.max_frames_per_char = 2;
  c.min_gap_frames = c.max_gap_frames = 1;
  c.edge_frames = 3;
  CorpusGenerator gen(c);
  const Utterance u = gen.Render("x", {"cab"});
  const Matrix& p = gen.prototypes();
  ASSERT_EQ(u.features.rows(), 4 + 6 + 4);
  for (int t = 0; t < 4; ++t) EXPECT_TRUE(u.features.row(t).isZero(0.0));
  const std::string word = "cab";
  for (int k = 0; k < 3; ++k)
    for (int r = 0; r < 2; ++r) EXPECT_EQ(u.features.row(4 + 2 * k + r), p.row(word[k] - 'a'));
  for (int t = 10; t < 14; ++t) EXPECT_TRUE(u.features.row(t).isZero(0.0));
  for (Eigen::Index r = 0; r < p.rows(); ++r) EXPECT_NEAR(p.row(r).norm(), 1.0, 1e-12);
}

TEST(CorpusTest, SplitsRespectRareAndHotwordContracts) {
  const auto c = GenerateCorpus(SmallConfig());
  const auto train = WordFrequencies(c.train);
  EXPECT_EQ(train.at("ratatat"), 2);
  EXPECT_EQ(train.at("azusa"), 2);
  EXPECT_EQ(train.count("margera"), 0u);
  bool test_has_rare = false;
  for (const auto& u : c.test)
    for (const auto& w : u.transcript) test_has_rare |= (w == "ratatat" || w == "azusa");
  EXPECT_TRUE(test_has_rare);
  ASSERT_EQ(c.hotword.size(), 4u);
  for (const auto& u : c.hotword)
    EXPECT_EQ(std::count(u.transcript.begin(), u.transcript.end(), "margera"), 1);
  for (const auto& u : c.train) EXPECT_GT(u.features.rows(), 0);
}

TEST(CorpusTest, NonceTailWordsAreTrainOnly) {
  CorpusConfig c = SmallConfig();
  c.tail_words = 25;
  c.tail_count = 2;
  const auto corpus = GenerateCorpus(c);
  const std::set<std::string> known(c.lexicon.begin(), c.lexicon.end());
  int nonce = 0;
  for (const auto& [w, n] : WordFrequencies(corpus.train)) {
    if (known.count(w)) continue;
    ++nonce;
    EXPECT_EQ(n, 2) << w;
    EXPECT_NE(w, "margera");
    EXPECT_GE(w.size(), 4u);
    EXPECT_LE(w.size(), 8u);
  }
  EXPECT_EQ(nonce, 25);
  for (const auto& u : corpus.test)
    for (const auto& w : u.transcript) EXPECT_TRUE(known.count(w)) << w;
  // The nonce words make every nonce slot an OOV for the word vocabulary.
  const auto vocab = WordVocab::Build(Transcripts(corpus.train), 10);
  for (const auto& [w, n] : WordFrequencies(corpus.train))
    if (!known.count(w)) EXPECT_FALSE(vocab.Contains(w));
}

// Share of nonce letters that are 'a' or 'b'.
double NonceShareOfAb(const std::string& tail_letters) {
  CorpusConfig c = SmallConfig();
  c.lexicon = {std::string(20, 'a'), std::string(20, 'b'), "abababababababababab"};
  c.oov_target_words.clear();
  c.tail_words = 40;
  c.tail_letters = tail_letters;
  const std::set<std::string> known(c.lexicon.begin(), c.lexicon.end());
  int letters = 0, ab = 0;
  for (const auto& [w, n] : WordFrequencies(GenerateCorpus(c).train)) {
    if (known.count(w)) continue;
    for (char ch : w) {
      ++letters;
      ab += ch == 'a' || ch == 'b';
    }
  }
  return static_cast<double>(ab) / letters;
}

TEST(CorpusTest, BigramNonceWordsFollowLexiconLetters) {
  // Uniform letters: expected share 2/26. Bigram chain: the start row keeps
  // 3 of 5.4 units of mass on a/b and the a and b rows about 29 of 31.4.
  EXPECT_LT(NonceShareOfAb("uniform"), 0.2);
  EXPECT_GT(NonceShareOfAb("bigram"), 0.35);
  CorpusConfig c = SmallConfig();
  c.tail_letters = "markov";
  EXPECT_THROW(GenerateCorpus(c), Error);
}

TEST(CorpusTest, HotwordNoiseOnlyAffectsHotwordSplit) {
  CorpusConfig c = SmallConfig();
  const auto base = GenerateCorpus(c);
  c.hotword_noise = 0.0;
  const auto quiet = GenerateCorpus(c);
  ExpectSameUtterances(quiet.train, base.train);
  ExpectSameUtterances(quiet.test, base.test);
  ASSERT_EQ(quiet.hotword.size(), base.hotword.size());
  CorpusGenerator gen(c);
  for (const auto& u : quiet.hotword) {
    EXPECT_EQ(u.transcript, base.hotword[&u - quiet.hotword.data()].transcript);
    // Noiseless frames are pauses or exact prototypes.
    for (Eigen::Index t = 0; t < u.features.rows(); ++t) {
      bool exact = u.features.row(t).isZero(0.0);
      for (Eigen::Index p = 0; !exact && p < gen.prototypes().rows(); ++p)
        exact = u.features.row(t) == gen.prototypes().row(p);
      EXPECT_TRUE(exact);
    }
  }
}

TEST(CorpusTest, RareWordBecomesOovAtThreshold) {
  CorpusConfig c = SmallConfig();
  c.train_utterances = 200;
  const auto corpus = GenerateCorpus(c);
  const auto transcripts = Transcripts(corpus.train);
  std::map<std::string, int> counts;
  for (const auto& t : transcripts)
    for (const auto& w : t) ++counts[w];
  ASSERT_EQ(counts["ratatat"], 2);
  const auto vocab = WordVocab::Build(transcripts, 10);
  EXPECT_EQ(vocab.Lookup("ratatat"), WordVocab::kOovId);
  for (const auto& [w, n] : counts) EXPECT_EQ(vocab.Contains(w), n >= 10) << w;
}

TEST(CorpusTest, FrequencyProfileMatchesWeights) {
  // Chi-square sanity on the regular-word unigram profile.
  CorpusConfig c;
  c.lexicon = {"one", "two", "three", "four"};
  c.weights = {4, 3, 2, 1};
  c.train_utterances = 2000;
  c.test_utterances = 0;
  c.seed = 3;
  const auto counts = WordFrequencies(GenerateCorpus(c).train);
  int total = 0;
  for (const auto& [w, n] : counts) total += n;
  double chi2 = 0.0;
  for (size_t i = 0; i < c.lexicon.size(); ++i) {
    const double expected = total * c.weights[i] / 10.0;
    const double d = counts.at(c.lexicon[i]) - expected;
    chi2 += d * d / expected;
  }
  EXPECT_LT(chi2, 16.27);  // p = 0.001 at 3 degrees of freedom
}

TEST(CorpusTest, HomophonesShareRendering) {
  CorpusConfig c = SmallConfig();
  c.lexicon.push_back("purr");
  c.lexicon.push_back("per");
  c.homophones = {{"purr", "per"}};
  c.noise = 0.0;
  c.min_frames_per_char = c.max_frames_per_char = 1;
  c.min_gap_frames = c.max_gap_frames = 0;
  CorpusGenerator gen(c);
  EXPECT_EQ(gen.Render("a", {"purr"}).features, gen.Render("b", {"per"}).features);
}

TEST(CorpusTest, InvalidConfigsThrow) {
  auto bad = SmallConfig();
  bad.lexicon.push_back("x-ray");
  EXPECT_THROW(GenerateCorpus(bad), Error);
  bad = SmallConfig();
  bad.oov_target_words.push_back("zebra");
  EXPECT_THROW(GenerateCorpus(bad), Error);
  bad = SmallConfig();
  bad.hotwords = {"play"};
  EXPECT_THROW(GenerateCorpus(bad), Error);
  bad = SmallConfig();
  bad.noise = -1;
  EXPECT_THROW(GenerateCorpus(bad), Error);
  bad = SmallConfig();
  bad.weights = {1, 2};
  EXPECT_THROW(GenerateCorpus(bad), Error);
}

TEST(CorpusIoTest, SaveLoadRoundTrip) {
  const auto dir = TempDir("roundtrip");
  const auto c = GenerateCorpus(SmallConfig());
  SaveCorpus(c, dir);
  const auto back = LoadCorpus(dir);
  ExpectSameUtterances(back.train, c.train);
  ExpectSameUtterances(back.test, c.test);
  ExpectSameUtterances(back.hotword, c.hotword);
  EXPECT_EQ(back.config.lexicon, c.config.lexicon);
  EXPECT_EQ(back.config.seed, c.config.seed);
  fs::remove_all(dir);
}

TEST(CorpusIoTest, EmptyTestSplitAllowed) {
  const auto dir = TempDir("empty_test");
  auto cfg = SmallConfig();
  cfg.test_utterances = 0;
  const auto c = GenerateCorpus(cfg);
  EXPECT_TRUE(c.test.empty());
  SaveCorpus(c, dir);
  const auto back = LoadCorpus(dir);
  EXPECT_TRUE(back.test.empty());
  EXPECT_EQ(back.train.size(), c.train.size());
  fs::remove_all(dir);
}

TEST(CorpusIoTest, TruncatedOrMismatchedFilesThrow) {
  const auto dir = TempDir("truncated");
  SaveCorpus(GenerateCorpus(SmallConfig()), dir);
  // Truncate one feature file.
  fs::path victim;
  for (const auto& e : fs::directory_iterator(dir / "features")) {
    victim = e.path();
    break;
  }
  fs::resize_file(victim, fs::file_size(victim) / 2);
  EXPECT_THROW(LoadCorpus(dir), Error);
  // Version mismatch in the header.
  SaveCorpus(GenerateCorpus(SmallConfig()), dir);
  {
    std::ifstream is(dir / "corpus.json");
    auto j = nlohmann::json::parse(is);
    j["version"] = 99;
    std::ofstream(dir / "corpus.json") << j.dump();
  }
  try {
    LoadCorpus(dir);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kVersion);
  }
  fs::remove_all(dir);
  EXPECT_THROW(LoadCorpus(dir), Error);
}

}  // namespace
}  // namespace hyctc
