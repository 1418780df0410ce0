// tests/model_test.cpp

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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "hyctc/corpus.hpp"
#include "hyctc/model.hpp"
#include "hyctc/train.hpp"
#include "test_util.hpp"

namespace hyctc {
namespace {

ModelConfig TinyConfig(int row_conv = 1) {
  ModelConfig c;
  c.input_dim = 2;
  c.hidden_dim = 3;
  c.num_shared_layers = 2;
  c.head_hidden_dim = 3;
  c.word_vocab_size = 5;
  c.char_vocab_size = 4;
  c.row_conv_context = row_conv;
  c.frame_stack = 2;
  c.frame_shift = 1;
  c.seed = 3;
  return c;
}

Matrix RandomFeatures(std::mt19937_64& rng, int T, int d) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(T, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

std::string TempPath(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("hyctc_model_test_" + name)).string();
}

TEST(FramingTest, StackedFrameCounts) {
  EXPECT_EQ(StackedFrames(80, 8, 3), 25);
  EXPECT_EQ(StackedFrames(7, 1, 1), 7);
  EXPECT_EQ(StackedFrames(3, 4, 2), 0);
  // ceil((T - k + 1) / s) by direct counting of window starts.
  for (int T = 1; T < 40; ++T)
    for (int k = 1; k <= 5; ++k)
      for (int s = 1; s <= 4; ++s) {
        int starts = 0;
        for (int t = 0; t + k <= T; t += s) ++starts;
        EXPECT_EQ(StackedFrames(T, k, s), starts);
      }
}

TEST(FramingTest, IdentityAndLayout) {
  std::mt19937_64 rng(1);
  const Matrix raw = RandomFeatures(rng, 9, 3);
  EXPECT_EQ(StackFrames(raw, 1, 1), raw);
  const Matrix st = StackFrames(raw, 3, 2);
  ASSERT_EQ(st.rows(), 4);
  ASSERT_EQ(st.cols(), 9);
  EXPECT_EQ(st(1, 0), raw(2, 0));
  EXPECT_EQ(st(1, 8), raw(4, 2));
  EXPECT_THROW(StackFrames(Matrix(0, 3), 1, 1), Error);
  EXPECT_THROW(StackFrames(raw, 10, 1), Error);
}

TEST(RowConvolutionTest, IdentityAndZero) {
  std::mt19937_64 rng(2);
  const Matrix h = RandomFeatures(rng, 6, 4);
  const Matrix eye = Matrix::Identity(4, 4), zero = Matrix::Zero(4, 4);
  EXPECT_EQ(nn::RowConvolution(h, {&eye}), h);
  EXPECT_TRUE(nn::RowConvolution(h, {&zero, &zero, &zero}).isZero(0.0));
}

TEST(RowConvolutionTest, MatchesDirectSum) {
  std::mt19937_64 rng(3);
  const int T = 7, H = 3, C = 2;
  const Matrix h = RandomFeatures(rng, T, H);
  std::vector<Matrix> w;
  for (int k = 0; k < 2 * C + 1; ++k) w.push_back(RandomFeatures(rng, H, H));
  std::vector<const Matrix*> wp;
  for (const auto& m : w) wp.push_back(&m);
  const Matrix out = nn::RowConvolution(h, wp);
  ASSERT_EQ(out.rows(), T);
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < H; ++i) {
      double want = 0.0;
      for (int c = -C; c <= C; ++c) {
        if (t + c < 0 || t + c >= T) continue;
        for (int j = 0; j < H; ++j) want += w[c + C](i, j) * h(t + c, j);
      }
      EXPECT_NEAR(out(t, i), want, 1e-12);
    }
}

TEST(HybridModelTest, RowConvolutionTapCount) {
  ModelConfig c = TinyConfig(4);
  HybridModel m(c);
  int taps = 0;
  for (const auto& t : m.tensors()) taps += t.name.starts_with("char.rowconv.");
  EXPECT_EQ(taps, 9);
}

TEST(HybridModelTest, ForwardShapesAndErrors) {
  HybridModel m(TinyConfig());
  std::mt19937_64 rng(4);
  const auto out = m.Forward(RandomFeatures(rng, 8, 2), Head::kBoth);
  ASSERT_TRUE(out.word && out.chars);
  EXPECT_EQ(out.word->frames(), 7);
  EXPECT_EQ(out.chars->frames(), 7);
  EXPECT_EQ(out.word->vocab_size(), 5);
  EXPECT_EQ(out.chars->vocab_size(), 4);
  for (int t = 0; t < 7; ++t) EXPECT_NEAR(out.word->values().row(t).array().exp().sum(), 1.0, 1e-12);
  EXPECT_FALSE(m.Forward(RandomFeatures(rng, 8, 2), Head::kWord).chars.has_value());
  EXPECT_THROW(m.Forward(Matrix(0, 2), Head::kBoth), Error);
  EXPECT_THROW(m.Forward(RandomFeatures(rng, 8, 3), Head::kBoth), Error);
  ModelConfig bad = TinyConfig();
  bad.frame_shift = 0;
  EXPECT_THROW(HybridModel{bad}, Error);
}

TEST(HybridModelTest, ForwardIsDeterministic) {
  std::mt19937_64 rng(5);
  const Matrix x = RandomFeatures(rng, 10, 2);
  const HybridModel a(TinyConfig()), b(TinyConfig());
  const auto oa = a.Forward(x, Head::kBoth), ob = b.Forward(x, Head::kBoth);
  EXPECT_EQ(oa.word->values(), ob.word->values());
  EXPECT_EQ(oa.chars->values(), ob.chars->values());
}

// Central differences of the total loss of both heads against every
// parameter, including recurrent and row-convolution weights.
TEST(HybridModelTest, EndToEndGradientCheck) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 3; ++trial) {
    ModelConfig c = TinyConfig(trial == 2 ? 0 : 1);
    c.seed = 10 + trial;
    HybridModel m(c);
    // Perturb the identity row-convolution start so its gradient is generic.
    for (auto& t : m.mutable_tensors())
      if (t.name.starts_with("char.rowconv.")) t.value += 0.3 * RandomFeatures(rng, 3, 3);
    const Matrix x = RandomFeatures(rng, 6, 2);  // 5 stacked frames
    const LabelSequence wl = {1, 3}, cl = {2, 1, 2};
    Gradients g = m.ZeroGradients();
    const auto base = m.Loss(x, &wl, &cl, &g);
    ASSERT_TRUE(std::isfinite(base.loss));
    double worst = 0.0;
    const double h = 1e-5;
    auto tensors = m.mutable_tensors();
    for (size_t i = 0; i < tensors.size(); ++i) {
      for (Eigen::Index k = 0; k < tensors[i].value.size(); ++k) {
        double& p = tensors[i].value.data()[k];
        const double orig = p;
        p = orig + h;
        const double up = m.Loss(x, &wl, &cl, nullptr).loss;
        p = orig - h;
        const double down = m.Loss(x, &wl, &cl, nullptr).loss;
        p = orig;
        const double numeric = (up - down) / (2 * h);
        const double analytic = g[i].data()[k];
        const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-4});
        const double rel = std::abs(numeric - analytic) / scale;
        worst = std::max(worst, rel);
        EXPECT_LE(rel, 1e-3) << tensors[i].name << "[" << k << "] analytic " << analytic << " numeric " << numeric;
      }
    }
    RecordProperty("worst_relative_error_" + std::to_string(trial), std::to_string(worst));
  }
}

std::vector<TrainExample> RandomExamples(std::mt19937_64& rng, int n, int V) {
  std::uniform_int_distribution<int> lab(1, V - 1);
  std::vector<TrainExample> out;
  for (int i = 0; i < n; ++i) out.push_back({RandomFeatures(rng, 8, 2), LabelSequence{lab(rng), lab(rng)}});
  return out;
}

TEST(FreezingTest, CharStageLeavesSharedStackAndWordHeadBitIdentical) {
  std::mt19937_64 rng(7);
  HybridModel m(TinyConfig());
  const auto word_data = RandomExamples(rng, 12, 5);
  const auto char_data = RandomExamples(rng, 12, 4);
  TrainHyper h;
  h.epochs = 2;
  h.batch_size = 4;
  TrainWordStage(m, word_data, h);
  const auto shared = m.SharedChecksum(), word = m.WordHeadChecksum(), chars = m.CharHeadChecksum();
  std::vector<Matrix> lattices;
  for (const auto& ex : word_data) lattices.push_back(m.Forward(ex.features, Head::kWord).word->values());

  h.epochs = 100;
  h.batch_size = 1;
  h.max_steps = 100;
  h.optimizer = "adam";
  const auto stats = TrainCharStage(m, char_data, h);
  EXPECT_EQ(stats.steps, 100);
  EXPECT_TRUE(m.SharedFrozen());
  EXPECT_EQ(m.SharedChecksum(), shared);
  EXPECT_EQ(m.WordHeadChecksum(), word);
  EXPECT_NE(m.CharHeadChecksum(), chars);
  for (size_t i = 0; i < word_data.size(); ++i)
    EXPECT_EQ(m.Forward(word_data[i].features, Head::kWord).word->values(), lattices[i]);
  EXPECT_EQ(m.stage(), Stage::kChar);
}

TEST(FreezingTest, FreezeIsIdempotentAndReversible) {
  std::mt19937_64 rng(8);
  HybridModel m(TinyConfig());
  m.FreezeShared();
  m.FreezeShared();
  EXPECT_TRUE(m.SharedFrozen());
  for (size_t i = 0; i < m.tensors().size(); ++i) EXPECT_EQ(m.tensors()[i].frozen, m.IsShared(i));

  // A frozen tensor is never written by the optimizer.
  const auto before = m.SharedChecksum();
  Gradients g = m.ZeroGradients();
  for (auto& x : g) x.setOnes();
  Optimizer opt(m, TrainHyper{});
  opt.Step(m, g, std::vector<bool>(m.tensors().size(), true));
  EXPECT_EQ(m.SharedChecksum(), before);

  m.FreezeShared(false);
  EXPECT_FALSE(m.SharedFrozen());
  TrainHyper h;
  h.epochs = 1;
  TrainWordStage(m, RandomExamples(rng, 4, 5), h);
  EXPECT_NE(m.SharedChecksum(), before);
}

TEST(TrainingTest, FixedSeedGivesIdenticalLossCurve) {
  auto run = [] {
    std::mt19937_64 rng(9);
    HybridModel m(TinyConfig());
    TrainHyper h;
    h.epochs = 3;
    h.batch_size = 3;
    h.optimizer = "adam";
    return std::make_pair(TrainWordStage(m, RandomExamples(rng, 9, 5), h).step_loss, m.SharedChecksum());
  };
  const auto a = run(), b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
}

TEST(TrainingTest, OverfitsOneUtteranceIncludingOovLabel) {
  std::mt19937_64 rng(10);
  ModelConfig c = TinyConfig(0);
  c.hidden_dim = c.head_hidden_dim = 8;
  HybridModel m(c);
  // Word labels include the OOV id, an ordinary output node.
  const std::vector<TrainExample> data = {{RandomFeatures(rng, 12, 2), LabelSequence{3, WordVocab::kOovId, 4}}};
  const double start = m.Loss(data[0].features, &data[0].labels, nullptr, nullptr).loss;
  TrainHyper h;
  h.epochs = 400;
  h.batch_size = 1;
  h.optimizer = "adam";
  h.learning_rate = 0.02;
  const auto stats = TrainWordStage(m, data, h);
  const double end = m.Loss(data[0].features, &data[0].labels, nullptr, nullptr).loss;
  EXPECT_LT(end, 0.05);
  EXPECT_LT(end, 0.01 * start);
  const auto greedy = GreedyDecode(*m.Forward(data[0].features, Head::kWord).word);
  EXPECT_EQ(greedy.labels, data[0].labels);
  EXPECT_EQ(stats.skipped, 0);
}

TEST(TrainingTest, HeldOutLossDecreasesForBothHeads) {
  CorpusConfig cc;
  cc.lexicon = {"cat", "dog", "bird", "fish", "cow"};
  cc.train_utterances = 60;
  cc.test_utterances = 20;
  cc.noise = 0.1;
  cc.edge_frames = 2;
  cc.seed = 5;
  const Corpus corpus = GenerateCorpus(cc);
  const auto vocab = WordVocab::Build(Transcripts(corpus.train), 1);
  const auto cs = CharSet::Cs28();
  auto examples = [&](const std::vector<Utterance>& utts, bool words) {
    std::vector<TrainExample> out;
    for (const auto& u : utts) out.push_back({u.features, words ? vocab.Encode(u.transcript) : cs.Encode(u.transcript)});
    return out;
  };
  ModelConfig mc;
  mc.input_dim = cc.proto_dim;
  mc.hidden_dim = mc.head_hidden_dim = 16;
  mc.num_shared_layers = 1;
  mc.word_vocab_size = vocab.size();
  mc.char_vocab_size = cs.size();
  mc.frame_stack = 2;
  mc.frame_shift = 1;
  HybridModel m(mc);
  const auto wtrain = examples(corpus.train, true), wtest = examples(corpus.test, true);
  const auto ctrain = examples(corpus.train, false), ctest = examples(corpus.test, false);
  TrainHyper h;
  h.epochs = 4;
  h.optimizer = "adam";
  const double w0 = MeanHeadLoss(m, wtest, Head::kWord);
  TrainWordStage(m, wtrain, h);
  EXPECT_LT(MeanHeadLoss(m, wtest, Head::kWord), w0);
  const double c0 = MeanHeadLoss(m, ctest, Head::kChar);
  TrainCharStage(m, ctrain, h);
  EXPECT_LT(MeanHeadLoss(m, ctest, Head::kChar), c0);
}

TEST(TrainingTest, NanLossAbortsWithDiagnostic) {
  std::mt19937_64 rng(11);
  HybridModel m(TinyConfig());
  m.tensor("word.out.b").value(0, 0) = std::numeric_limits<double>::quiet_NaN();
  try {
    TrainWordStage(m, RandomExamples(rng, 2, 5), TrainHyper{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDivergence);
  }
}

TEST(InputNormalizationTest, AppliedBeforeStackingAndChecked) {
  HybridModel m(TinyConfig());
  Matrix raw(3, 2);
  raw << 1, 2, 3, 4, 5, 6;
  EXPECT_EQ(m.Stack(raw), StackFrames(raw, 2, 1));  // identity until set
  m.SetInputNormalization(Eigen::RowVector2d(1, 2), Eigen::RowVector2d(0.5, 2));
  Matrix expect(3, 2);
  expect << 0, 0, 1, 4, 2, 8;
  EXPECT_EQ(m.Stack(raw), StackFrames(expect, 2, 1));
  EXPECT_THROW(m.SetInputNormalization(Eigen::RowVector3d(0, 0, 0), Eigen::RowVector2d(1, 1)), Error);
}

TEST(CheckpointTest, ReloadIsBitExact) {
  std::mt19937_64 rng(12);
  HybridModel m(TinyConfig(2));
  TrainHyper h;
  h.epochs = 1;
  TrainWordStage(m, RandomExamples(rng, 4, 5), h);
  m.FreezeShared();
  m.SetInputNormalization(Eigen::RowVector2d(0.25, -1.5), Eigen::RowVector2d(2.0, 0.125));
  const auto path = TempPath("reload.ckpt");
  m.Save(path);
  const HybridModel back = HybridModel::Load(path);
  ASSERT_EQ(back.tensors().size(), m.tensors().size());
  for (size_t i = 0; i < m.tensors().size(); ++i) {
    EXPECT_EQ(back.tensors()[i].name, m.tensors()[i].name);
    EXPECT_EQ(back.tensors()[i].value, m.tensors()[i].value);
    EXPECT_EQ(back.tensors()[i].frozen, m.tensors()[i].frozen);
  }
  EXPECT_EQ(back.stage(), Stage::kWord);
  EXPECT_EQ(back.config().row_conv_context, 2);
  EXPECT_EQ(back.input_mean(), m.input_mean());
  EXPECT_EQ(back.input_inv_std(), m.input_inv_std());
  const Matrix x = RandomFeatures(rng, 7, 2);
  EXPECT_EQ(back.Forward(x, Head::kBoth).chars->values(), m.Forward(x, Head::kBoth).chars->values());

  // Truncated payload and foreign files are rejected.
  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 8);
  EXPECT_THROW(HybridModel::Load(path), Error);
  { std::ofstream(path) << "not a checkpoint"; }
  EXPECT_THROW(HybridModel::Load(path), Error);
  std::filesystem::remove(path);
  EXPECT_THROW(HybridModel::Load(path), Error);
}

}  // namespace
}  // namespace hyctc
