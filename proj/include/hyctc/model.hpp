// hyctc/model.hpp

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

// Shared-stack recurrent model with a word head and a character head.
//
//   features -> frame stacking -> shared LSTM x num_shared_layers
//     -> word head: LSTM -> affine -> log-softmax
//     -> char head: LSTM -> row convolution (optional) -> affine -> log-softmax
//
// Parameters live in one ordered list of named tensors so that freezing,
// checksumming, checkpointing and gradient checks can treat them uniformly.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyctc/ctc.hpp"
#include "hyctc/error.hpp"
#include "hyctc/lstm.hpp"
#include "hyctc/matrix.hpp"

namespace hyctc {

struct ModelConfig {
  int input_dim = 12;  // per raw feature frame
  int hidden_dim = 32;
  int num_shared_layers = 2;
  int head_hidden_dim = 32;
  int word_vocab_size = 0;
  int char_vocab_size = 28;
  int row_conv_context = 0;  // C; 0 disables the row convolution
  int frame_stack = 4;       // k
  int frame_shift = 2;       // s
  std::uint64_t seed = 1;

  void Validate() const {
    if (input_dim < 1 || hidden_dim < 1 || num_shared_layers < 1 || head_hidden_dim < 1 ||
        word_vocab_size < 2 || char_vocab_size < 2)
      throw Error(ErrorKind::kInvalidInput, "model dimensions must be positive (vocabularies >= 2)");
    if (row_conv_context < 0) throw Error(ErrorKind::kInvalidInput, "row_conv_context must be >= 0");
    if (frame_stack < 1 || frame_shift < 1) throw Error(ErrorKind::kInvalidInput, "frame_stack/frame_shift must be >= 1");
  }

  int stacked_dim() const { return input_dim * frame_stack; }
};

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"input_dim", c.input_dim},
       {"hidden_dim", c.hidden_dim},
       {"num_shared_layers", c.num_shared_layers},
       {"head_hidden_dim", c.head_hidden_dim},
       {"word_vocab_size", c.word_vocab_size},
       {"char_vocab_size", c.char_vocab_size},
       {"row_conv_context", c.row_conv_context},
       {"frame_stack", c.frame_stack},
       {"frame_shift", c.frame_shift},
       {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  ModelConfig d;
  c.input_dim = j.value("input_dim", d.input_dim);
  c.hidden_dim = j.value("hidden_dim", d.hidden_dim);
  c.num_shared_layers = j.value("num_shared_layers", d.num_shared_layers);
  c.head_hidden_dim = j.value("head_hidden_dim", d.head_hidden_dim);
  c.word_vocab_size = j.value("word_vocab_size", d.word_vocab_size);
  c.char_vocab_size = j.value("char_vocab_size", d.char_vocab_size);
  c.row_conv_context = j.value("row_conv_context", d.row_conv_context);
  c.frame_stack = j.value("frame_stack", d.frame_stack);
  c.frame_shift = j.value("frame_shift", d.frame_shift);
  c.seed = j.value("seed", d.seed);
}

/// Output frame count for T raw frames: ceil((T - k + 1) / s).
inline int StackedFrames(int raw_frames, int stack, int shift) {
  if (raw_frames < stack) return 0;
  return (raw_frames - stack + shift) / shift;
}

/// Row t concatenates raw frames t*s .. t*s+k-1.
inline Matrix StackFrames(const Matrix& raw, int stack, int shift) {
  const int T = StackedFrames(static_cast<int>(raw.rows()), stack, shift);
  if (T < 1)
    throw Error(ErrorKind::kDimension, "need at least " + std::to_string(stack) + " feature frames, got " +
                                           std::to_string(raw.rows()));
  const Eigen::Index d = raw.cols();
  Matrix out(T, d * stack);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < stack; ++j) out.block(t, j * d, 1, d) = raw.row(t * shift + j);
  return out;
}

struct Tensor {
  std::string name;
  Matrix value;
  bool frozen = false;
};

enum class Head { kWord, kChar, kBoth };

enum class Stage { kInit, kWord, kChar };

inline std::string StageName(Stage s) {
  switch (s) {
    case Stage::kInit: return "init";
    case Stage::kWord: return "word";
    case Stage::kChar: return "char";
  }
  return "init";
}

inline Stage StageFromName(const std::string& s) {
  if (s == "init") return Stage::kInit;
  if (s == "word") return Stage::kWord;
  if (s == "char") return Stage::kChar;
  throw Error(ErrorKind::kFormat, "unknown stage tag " + s);
}

using Gradients = std::vector<Matrix>;

struct HeadLoss {
  double loss = 0.0;
  bool feasible = true;
};

class HybridModel {
 public:
  explicit HybridModel(const ModelConfig& config) : config_(config) {
    config_.Validate();
    input_mean_ = Eigen::RowVectorXd::Zero(config_.input_dim);
    input_inv_std_ = Eigen::RowVectorXd::Ones(config_.input_dim);
    Build();
    Initialize();
  }

  const ModelConfig& config() const { return config_; }
  Stage stage() const { return stage_; }
  void set_stage(Stage s) { stage_ = s; }

  std::span<const Tensor> tensors() const { return tensors_; }
  std::span<Tensor> mutable_tensors() { return tensors_; }
  Tensor& tensor(const std::string& name) {
    for (auto& t : tensors_)
      if (t.name == name) return t;
    throw Error(ErrorKind::kInvalidInput, "no tensor named " + name);
  }

  bool IsShared(size_t index) const { return index < num_shared_tensors_; }
  bool IsCharHead(size_t index) const { return index >= char_begin_; }
  bool IsWordHead(size_t index) const { return index >= num_shared_tensors_ && index < char_begin_; }

  /// Marks every shared-stack tensor frozen (or trainable again).
  void FreezeShared(bool frozen = true) {
    for (size_t i = 0; i < num_shared_tensors_; ++i) tensors_[i].frozen = frozen;
  }
  bool SharedFrozen() const {
    for (size_t i = 0; i < num_shared_tensors_; ++i)
      if (!tensors_[i].frozen) return false;
    return true;
  }

  /// FNV-1a over the raw bytes of the shared-stack tensors.
  std::uint64_t SharedChecksum() const { return Checksum(0, num_shared_tensors_); }
  std::uint64_t WordHeadChecksum() const { return Checksum(num_shared_tensors_, char_begin_); }
  std::uint64_t CharHeadChecksum() const { return Checksum(char_begin_, tensors_.size()); }

  Gradients ZeroGradients() const {
    Gradients g;
    g.reserve(tensors_.size());
    for (const auto& t : tensors_) g.push_back(Matrix::Zero(t.value.rows(), t.value.cols()));
    return g;
  }

  /// Fixed per-dimension input normalization, (x - mean) * inv_std, applied
  /// before frame stacking. Not a trainable parameter.
  void SetInputNormalization(const Eigen::RowVectorXd& mean, const Eigen::RowVectorXd& inv_std) {
    if (mean.size() != config_.input_dim || inv_std.size() != config_.input_dim)
      throw Error(ErrorKind::kDimension, "input normalization does not match input_dim");
    input_mean_ = mean;
    input_inv_std_ = inv_std;
  }
  const Eigen::RowVectorXd& input_mean() const { return input_mean_; }
  const Eigen::RowVectorXd& input_inv_std() const { return input_inv_std_; }

  Matrix Stack(const Matrix& raw) const {
    if (raw.cols() != config_.input_dim)
      throw Error(ErrorKind::kDimension, "feature dim " + std::to_string(raw.cols()) + " != configured input_dim " +
                                             std::to_string(config_.input_dim));
    const Matrix x = (raw.rowwise() - input_mean_).array().rowwise() * input_inv_std_.array();
    return StackFrames(x, config_.frame_stack, config_.frame_shift);
  }

  struct SharedCache {
    std::vector<nn::LstmCache> layers;
  };

  /// Output of the shared stack for stacked input frames.
  Matrix SharedForward(const Matrix& stacked, SharedCache* cache = nullptr) const {
    Matrix h = stacked;
    if (cache) cache->layers.resize(config_.num_shared_layers);
    for (int l = 0; l < config_.num_shared_layers; ++l) {
      const size_t base = 3 * l;
      h = nn::LstmForward(V(base), V(base + 1), V(base + 2), h, cache ? &cache->layers[l] : nullptr);
    }
    return h;
  }

  struct Output {
    std::optional<LogPosteriorLattice> word;
    std::optional<LogPosteriorLattice> chars;
  };

  Output Forward(const Matrix& raw_features, Head head) const {
    const Matrix shared = SharedForward(Stack(raw_features));
    Output out;
    if (head != Head::kChar) out.word = LogPosteriorLattice(LogSoftmaxRows(WordScores(shared, nullptr)), 0);
    if (head != Head::kWord) out.chars = LogPosteriorLattice(LogSoftmaxRows(CharScores(shared, nullptr)), 0);
    return out;
  }

  struct WordCache {
    nn::LstmCache lstm;
  };
  struct CharCache {
    nn::LstmCache lstm;
    Matrix conv;  // row-convolution output (or the LSTM output when C = 0)
  };

  /// Word-head CTC loss on a shared-stack output; accumulates gradients into
  /// `grads` and, when `d_shared` is non-null, adds dLoss/dShared to it.
  HeadLoss WordHeadLoss(const Matrix& shared, std::span<const TokenId> labels, Gradients* grads,
                        Matrix* d_shared) const {
    WordCache cache;
    const Matrix scores = WordScores(shared, grads ? &cache : nullptr);
    if (!scores.allFinite()) throw Error(ErrorKind::kDivergence, "non-finite network output");
    const LogPosteriorLattice lat(LogSoftmaxRows(scores), 0);
    const auto ctc = CtcLoss(lat, labels, grads != nullptr);
    HeadLoss r{ctc.loss, ctc.feasible};
    if (!grads || !ctc.grad) return r;
    const size_t b = num_shared_tensors_;
    Matrix dh;
    nn::AffineBackward(V(b + 3), cache.lstm.h, *ctc.grad, (*grads)[b + 3], (*grads)[b + 4], &dh);
    Matrix dx;
    nn::LstmBackward(V(b), V(b + 1), cache.lstm, dh, (*grads)[b], (*grads)[b + 1], (*grads)[b + 2],
                     d_shared ? &dx : nullptr);
    if (d_shared) *d_shared += dx;
    return r;
  }

  HeadLoss CharHeadLoss(const Matrix& shared, std::span<const TokenId> labels, Gradients* grads,
                        Matrix* d_shared) const {
    CharCache cache;
    const Matrix scores = CharScores(shared, grads ? &cache : nullptr);
    if (!scores.allFinite()) throw Error(ErrorKind::kDivergence, "non-finite network output");
    const LogPosteriorLattice lat(LogSoftmaxRows(scores), 0);
    const auto ctc = CtcLoss(lat, labels, grads != nullptr);
    HeadLoss r{ctc.loss, ctc.feasible};
    if (!grads || !ctc.grad) return r;
    const size_t b = char_begin_;
    const size_t out_w = tensors_.size() - 2;
    Matrix dconv;
    nn::AffineBackward(V(out_w), cache.conv, *ctc.grad, (*grads)[out_w], (*grads)[out_w + 1], &dconv);
    Matrix dh;
    if (config_.row_conv_context > 0) {
      std::vector<Matrix*> dw;
      for (size_t k = 0; k < RowConvTaps(); ++k) dw.push_back(&(*grads)[b + 3 + k]);
      nn::RowConvolutionBackward(cache.lstm.h, RowConvWeights(), dconv, dw, dh);
    } else {
      dh = std::move(dconv);
    }
    Matrix dx;
    nn::LstmBackward(V(b), V(b + 1), cache.lstm, dh, (*grads)[b], (*grads)[b + 1], (*grads)[b + 2],
                     d_shared ? &dx : nullptr);
    if (d_shared) *d_shared += dx;
    return r;
  }

  /// Backpropagates dLoss/dShared through the shared stack.
  void SharedBackward(const SharedCache& cache, const Matrix& d_shared, Gradients& grads) const {
    Matrix d = d_shared;
    for (int l = config_.num_shared_layers - 1; l >= 0; --l) {
      const size_t base = 3 * l;
      Matrix dx;
      nn::LstmBackward(V(base), V(base + 1), cache.layers[l], d, grads[base], grads[base + 1], grads[base + 2],
                       l > 0 ? &dx : nullptr);
      d = std::move(dx);
    }
  }

  /// Total CTC loss over the requested heads for one utterance. Gradients
  /// for every tensor are accumulated into `grads` when it is non-null; the
  /// shared stack is skipped when all of it is frozen.
  HeadLoss Loss(const Matrix& raw_features, const LabelSequence* word_labels, const LabelSequence* char_labels,
                Gradients* grads) const {
    SharedCache cache;
    const bool back_shared = grads && !SharedFrozen();
    const Matrix shared = SharedForward(Stack(raw_features), back_shared ? &cache : nullptr);
    Matrix d_shared;
    if (back_shared) d_shared = Matrix::Zero(shared.rows(), shared.cols());
    HeadLoss total;
    if (word_labels) {
      const auto r = WordHeadLoss(shared, *word_labels, grads, back_shared ? &d_shared : nullptr);
      total.loss += r.loss;
      total.feasible &= r.feasible;
    }
    if (char_labels) {
      const auto r = CharHeadLoss(shared, *char_labels, grads, back_shared ? &d_shared : nullptr);
      total.loss += r.loss;
      total.feasible &= r.feasible;
    }
    if (back_shared && std::isfinite(total.loss)) SharedBackward(cache, d_shared, *grads);
    return total;
  }

  // Checkpoint container, little-endian:
  //   magic "HCTK" | u32 version | u64 header bytes | JSON header |
  //   tensor payloads (f64, row-major) in header order.
  static constexpr char kMagic[4] = {'H', 'C', 'T', 'K'};
  static constexpr std::uint32_t kCheckpointVersion = 1;

  void Save(const std::string& path) const {
    nlohmann::json header;
    header["config"] = config_;
    header["seed"] = config_.seed;
    header["stage"] = StageName(stage_);
    header["input_mean"] = std::vector<double>(input_mean_.data(), input_mean_.data() + input_mean_.size());
    header["input_inv_std"] = std::vector<double>(input_inv_std_.data(), input_inv_std_.data() + input_inv_std_.size());
    auto& list = header["tensors"] = nlohmann::json::array();
    for (const auto& t : tensors_)
      list.push_back({{"name", t.name}, {"rows", t.value.rows()}, {"cols", t.value.cols()}, {"frozen", t.frozen}});
    const std::string text = header.dump();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error(ErrorKind::kIo, "cannot open " + path + " for writing");
    os.write(kMagic, 4);
    internal::WritePod(os, kCheckpointVersion);
    internal::WritePod(os, static_cast<std::uint64_t>(text.size()));
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& t : tensors_)
      os.write(reinterpret_cast<const char*>(t.value.data()),
               static_cast<std::streamsize>(t.value.size() * sizeof(double)));
    if (!os) throw Error(ErrorKind::kIo, "failed writing checkpoint " + path);
  }

  static HybridModel Load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error(ErrorKind::kIo, "cannot open checkpoint " + path);
    char magic[4] = {};
    is.read(magic, 4);
    if (is.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0)
      throw Error(ErrorKind::kFormat, path + " is not a checkpoint");
    if (internal::ReadPod<std::uint32_t>(is, "version") != kCheckpointVersion)
      throw Error(ErrorKind::kVersion, "unsupported checkpoint version in " + path);
    const auto len = internal::ReadPod<std::uint64_t>(is, "header length");
    if (len > (1ULL << 26)) throw Error(ErrorKind::kFormat, "implausible checkpoint header length");
    std::string text(len, '\0');
    is.read(text.data(), static_cast<std::streamsize>(len));
    if (is.gcount() != static_cast<std::streamsize>(len)) throw Error(ErrorKind::kFormat, "truncated checkpoint header");
    const auto header = nlohmann::json::parse(text);
    HybridModel model(header.at("config").get<ModelConfig>());
    model.stage_ = StageFromName(header.at("stage").get<std::string>());
    const auto mean = header.at("input_mean").get<std::vector<double>>();
    const auto inv_std = header.at("input_inv_std").get<std::vector<double>>();
    model.SetInputNormalization(Eigen::Map<const Eigen::RowVectorXd>(mean.data(), mean.size()),
                                Eigen::Map<const Eigen::RowVectorXd>(inv_std.data(), inv_std.size()));
    const auto& list = header.at("tensors");
    if (list.size() != model.tensors_.size()) throw Error(ErrorKind::kFormat, "checkpoint tensor count mismatch");
    for (size_t i = 0; i < list.size(); ++i) {
      Tensor& t = model.tensors_[i];
      if (list[i].at("name").get<std::string>() != t.name || list[i].at("rows").get<Eigen::Index>() != t.value.rows() ||
          list[i].at("cols").get<Eigen::Index>() != t.value.cols())
        throw Error(ErrorKind::kFormat, "checkpoint tensor " + std::to_string(i) + " does not match the config");
      t.frozen = list[i].at("frozen").get<bool>();
      const auto bytes = static_cast<std::streamsize>(t.value.size() * sizeof(double));
      is.read(reinterpret_cast<char*>(t.value.data()), bytes);
      if (is.gcount() != bytes) throw Error(ErrorKind::kFormat, "truncated checkpoint payload for " + t.name);
    }
    return model;
  }

 private:
  const Matrix& V(size_t i) const { return tensors_[i].value; }

  size_t RowConvTaps() const {
    return config_.row_conv_context > 0 ? static_cast<size_t>(2 * config_.row_conv_context + 1) : 0;
  }

  std::vector<const Matrix*> RowConvWeights() const {
    std::vector<const Matrix*> w;
    for (size_t k = 0; k < RowConvTaps(); ++k) w.push_back(&V(char_begin_ + 3 + k));
    return w;
  }

  Matrix WordScores(const Matrix& shared, WordCache* cache) const {
    const size_t b = num_shared_tensors_;
    const Matrix h = nn::LstmForward(V(b), V(b + 1), V(b + 2), shared, cache ? &cache->lstm : nullptr);
    return nn::AffineForward(V(b + 3), V(b + 4), h);
  }

  Matrix CharScores(const Matrix& shared, CharCache* cache) const {
    const size_t b = char_begin_;
    const size_t out_w = tensors_.size() - 2;
    Matrix h = nn::LstmForward(V(b), V(b + 1), V(b + 2), shared, cache ? &cache->lstm : nullptr);
    if (config_.row_conv_context > 0) h = nn::RowConvolution(h, RowConvWeights());
    Matrix scores = nn::AffineForward(V(out_w), V(out_w + 1), h);
    if (cache) cache->conv = std::move(h);
    return scores;
  }

  void AddLstm(const std::string& prefix, int in, int hidden) {
    tensors_.push_back({prefix + ".wx", Matrix::Zero(4 * hidden, in)});
    tensors_.push_back({prefix + ".wh", Matrix::Zero(4 * hidden, hidden)});
    tensors_.push_back({prefix + ".b", Matrix::Zero(4 * hidden, 1)});
  }

  void Build() {
    int in = config_.stacked_dim();
    for (int l = 0; l < config_.num_shared_layers; ++l) {
      AddLstm("shared." + std::to_string(l), in, config_.hidden_dim);
      in = config_.hidden_dim;
    }
    num_shared_tensors_ = tensors_.size();
    AddLstm("word.lstm", config_.hidden_dim, config_.head_hidden_dim);
    tensors_.push_back({"word.out.w", Matrix::Zero(config_.word_vocab_size, config_.head_hidden_dim)});
    tensors_.push_back({"word.out.b", Matrix::Zero(config_.word_vocab_size, 1)});
    char_begin_ = tensors_.size();
    AddLstm("char.lstm", config_.hidden_dim, config_.head_hidden_dim);
    for (size_t k = 0; k < RowConvTaps(); ++k)
      tensors_.push_back({"char.rowconv." + std::to_string(static_cast<int>(k) - config_.row_conv_context),
                          Matrix::Zero(config_.head_hidden_dim, config_.head_hidden_dim)});
    tensors_.push_back({"char.out.w", Matrix::Zero(config_.char_vocab_size, config_.head_hidden_dim)});
    tensors_.push_back({"char.out.b", Matrix::Zero(config_.char_vocab_size, 1)});
  }

  // Uniform(+-1/sqrt(fan_in)) weights, forget-gate bias 1, identity centre tap
  // for the row convolution.
  void Initialize() {
    std::mt19937_64 rng(config_.seed);
    for (auto& t : tensors_) {
      const bool is_bias = t.name.ends_with(".b");
      if (t.name.starts_with("char.rowconv.")) {
        if (t.name == "char.rowconv.0") t.value.setIdentity();
        continue;
      }
      if (is_bias) {
        if (t.name.find("lstm") != std::string::npos || t.name.starts_with("shared.")) {
          const Eigen::Index H = t.value.rows() / 4;
          t.value.block(nn::kForget * H, 0, H, 1).setOnes();
        }
        continue;
      }
      const double bound = 1.0 / std::sqrt(static_cast<double>(t.value.cols()));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (Eigen::Index i = 0; i < t.value.size(); ++i) t.value.data()[i] = dist(rng);
    }
  }

  std::uint64_t Checksum(size_t begin, size_t end) const {
    std::uint64_t h = 1469598103934665603ULL;
    for (size_t i = begin; i < end; ++i) {
      const auto* p = reinterpret_cast<const unsigned char*>(tensors_[i].value.data());
      const size_t n = tensors_[i].value.size() * sizeof(double);
      for (size_t k = 0; k < n; ++k) {
        h ^= p[k];
        h *= 1099511628211ULL;
      }
    }
    return h;
  }

  ModelConfig config_;
  Eigen::RowVectorXd input_mean_, input_inv_std_;
  std::vector<Tensor> tensors_;
  size_t num_shared_tensors_ = 0;
  size_t char_begin_ = 0;
  Stage stage_ = Stage::kInit;
};

}  // namespace hyctc
