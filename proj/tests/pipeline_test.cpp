// tests/pipeline_test.cpp

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

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "hyctc/pipeline.hpp"

namespace hyctc {
namespace {

TEST(ExperimentConfigTest, JsonRoundTrip) {
  ExperimentConfig c = DefaultExperimentConfig();
  c.ApplySeed(42);
  c.beam_width = 9;
  c.charset = "cs83";
  c.hybrid_char_mode = CharDecodeMode::kMaxOutput;
  c.corpus.hotword_noise = 0.02;
  const nlohmann::json j = c;
  const auto back = j.get<ExperimentConfig>();
  EXPECT_EQ(nlohmann::json(back), j);
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(back.char_train.seed, 43u);
  EXPECT_EQ(back.hybrid_char_mode, CharDecodeMode::kMaxOutput);
}

TEST(ExperimentConfigTest, SeedKeyReseedsEveryStage) {
  const auto c = nlohmann::json{{"seed", 3}}.get<ExperimentConfig>();
  EXPECT_EQ(c.corpus.seed, 3u);
  EXPECT_EQ(c.model.seed, 3u);
  EXPECT_EQ(c.word_train.seed, 3u);
  EXPECT_EQ(c.char_train.seed, 4u);
}

TEST(ExperimentConfigTest, ShippedDefaultMatchesBuiltIn) {
  std::ifstream is(HYCTC_DEFAULT_CONFIG);
  ASSERT_TRUE(is) << HYCTC_DEFAULT_CONFIG;
  const auto shipped = nlohmann::json::parse(is).get<ExperimentConfig>();
  EXPECT_EQ(nlohmann::json(shipped), nlohmann::json(DefaultExperimentConfig()));
}

TEST(ExperimentConfigTest, ValidationRejectsBadValues) {
  auto c = DefaultExperimentConfig();
  EXPECT_NO_THROW(c.Validate());
  c.charset = "cs99";
  EXPECT_THROW(c.Validate(), Error);
  c = DefaultExperimentConfig();
  c.beam_width = 0;
  EXPECT_THROW(c.Validate(), Error);
  c = DefaultExperimentConfig();
  c.min_count = 0;
  EXPECT_THROW(c.Validate(), Error);
  EXPECT_THROW(nlohmann::json({{"hybrid_char_mode", "fuzzy"}}).get<ExperimentConfig>(), Error);
}

TEST(DecodeModeTest, NamesRoundTrip) {
  for (DecodeMode m : kAllDecodeModes) EXPECT_EQ(DecodeModeFromName(DecodeModeName(m)), m);
  EXPECT_THROW(DecodeModeFromName("beam"), Error);
}

TEST(InputNormalizationTest, FittedStatisticsStandardizeTrainingFrames) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Utterance> utts(3);
  for (auto& u : utts) {
    u.features.resize(10, 3);
    for (Eigen::Index r = 0; r < 10; ++r) {
      u.features(r, 0) = 5.0 + 2.0 * n(rng);
      u.features(r, 1) = -1.0 + 0.1 * n(rng);
      u.features(r, 2) = 7.0;  // constant column keeps unit scale
    }
  }
  ModelConfig mc;
  mc.input_dim = 3;
  mc.frame_stack = 1;
  mc.frame_shift = 1;
  mc.word_vocab_size = 4;
  HybridModel model(mc);
  FitInputNormalization(model, utts);
  Matrix all(30, 3);
  for (int i = 0; i < 3; ++i) all.middleRows(10 * i, 10) = model.Stack(utts[i].features);
  for (int k = 0; k < 2; ++k) {
    EXPECT_NEAR(all.col(k).mean(), 0.0, 1e-12);
    EXPECT_NEAR((all.col(k).array() - all.col(k).mean()).square().mean(), 1.0, 1e-12);
  }
  EXPECT_NEAR(all.col(2).cwiseAbs().maxCoeff(), 0.0, 1e-12);
  EXPECT_EQ(model.input_inv_std()(2), 1.0);
  EXPECT_THROW(FitInputNormalization(model, std::vector<Utterance>{}), Error);
}

TEST(DecodeRecordTest, JsonShape) {
  DecodeRecord r;
  r.id = "u1";
  r.word_only = {"play", std::string(kOovToken)};
  r.chars = Transcript{"play", "ratatat"};
  r.final_words = {"play", "ratatat"};
  OovEvent e;
  e.oov = {std::string(kOovToken), 4, 9};
  e.replacement = WordSpan{"ratatat", 3, 9};
  e.overlap = 6;
  r.oov_events.push_back(e);
  const nlohmann::json j = r;
  EXPECT_EQ(j.at("word_only"), "play <OOV>");
  EXPECT_EQ(j.at("final"), "play ratatat");
  EXPECT_EQ(j.at("oov_events")[0].at("replacement").at("word"), "ratatat");
  EXPECT_EQ(j.at("oov_events")[0].at("overlap"), 6);
  r.chars.reset();
  EXPECT_TRUE(nlohmann::json(r).at("char").is_null());

  std::ostringstream os;
  const DecodeRecord recs[] = {r};
  WriteHypotheses(os, recs);
  EXPECT_EQ(os.str(), "u1\tplay ratatat\n");
}

TEST(ReportTest, ComparisonTablesCarryRecoveryRate) {
  ModeComparison c;
  c.word_only.reference_words = c.hybrid.reference_words = 10;
  c.word_only.substitutions = 3;
  c.hybrid.substitutions = 2;
  c.recovery_rate = 0.5;
  const HotwordScore hot[] = {{"margera", 20, 0, 12}};
  std::ostringstream md, csv;
  WriteComparisonMarkdown(md, c, hot);
  WriteComparisonCsv(csv, c);
  EXPECT_NE(md.str().find("recovery_rate (valid-word graph): 0.500"), std::string::npos);
  EXPECT_NE(md.str().find("recovery_rate (max output): n/a"), std::string::npos);
  EXPECT_NE(md.str().find("| margera | 20 | 0 | 12 |"), std::string::npos);
  EXPECT_NE(csv.str().find("recovery_rate,0.500"), std::string::npos);
  EXPECT_DOUBLE_EQ(hot[0].after_rate(), 0.6);
}

}  // namespace
}  // namespace hyctc
