// hyctc/train.hpp

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

// Two-stage training: the word stage trains the shared stack and word head;
// the char stage freezes the shared stack and trains only the char head.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyctc/error.hpp"
#include "hyctc/model.hpp"

namespace hyctc {

struct TrainHyper {
  int epochs = 10;
  int batch_size = 8;
  double learning_rate = 0.01;
  std::string optimizer = "sgd";  // "sgd" or "adam"
  double momentum = 0.0;          // sgd only
  double clip_norm = 5.0;         // global gradient-norm clip; 0 disables
  double lr_decay = 1.0;          // multiplied into the rate after each epoch
  int max_steps = 0;              // 0: no cap
  std::uint64_t seed = 1;         // shuffling
};

inline void to_json(nlohmann::json& j, const TrainHyper& h) {
  j = {{"epochs", h.epochs},       {"batch_size", h.batch_size}, {"learning_rate", h.learning_rate},
       {"optimizer", h.optimizer}, {"momentum", h.momentum},     {"clip_norm", h.clip_norm},
       {"lr_decay", h.lr_decay},   {"max_steps", h.max_steps},   {"seed", h.seed}};
}

inline void from_json(const nlohmann::json& j, TrainHyper& h) {
  TrainHyper d;
  h.epochs = j.value("epochs", d.epochs);
  h.batch_size = j.value("batch_size", d.batch_size);
  h.learning_rate = j.value("learning_rate", d.learning_rate);
  h.optimizer = j.value("optimizer", d.optimizer);
  h.momentum = j.value("momentum", d.momentum);
  h.clip_norm = j.value("clip_norm", d.clip_norm);
  h.lr_decay = j.value("lr_decay", d.lr_decay);
  h.max_steps = j.value("max_steps", d.max_steps);
  h.seed = j.value("seed", d.seed);
}

struct TrainExample {
  Matrix features;       // raw frames x input_dim
  LabelSequence labels;  // word ids or char unit ids, depending on stage
};

struct TrainStats {
  std::vector<double> step_loss;   // mean loss of each minibatch
  std::vector<double> epoch_loss;  // mean loss of each epoch
  int skipped = 0;                 // infeasible or zero-probability examples
  int steps = 0;

  void WriteCsv(std::ostream& os) const {
    os << "step,loss\n";
    os.precision(17);
    for (size_t i = 0; i < step_loss.size(); ++i) os << i << ',' << step_loss[i] << '\n';
  }
};

using ProgressFn = std::function<void(int epoch, double mean_loss)>;

class Optimizer {
 public:
  Optimizer(const HybridModel& model, const TrainHyper& hyper) : hyper_(hyper), lr_(hyper.learning_rate) {
    if (hyper.optimizer != "sgd" && hyper.optimizer != "adam")
      throw Error(ErrorKind::kInvalidInput, "unknown optimizer " + hyper.optimizer);
    first_ = model.ZeroGradients();
    if (hyper.optimizer == "adam") second_ = model.ZeroGradients();
  }

  /// Clips, then updates every tensor selected by `trainable` that is not
  /// frozen. Frozen tensors are never written.
  void Step(HybridModel& model, Gradients& grads, const std::vector<bool>& trainable) {
    auto tensors = model.mutable_tensors();
    auto active = [&](size_t i) { return trainable[i] && !tensors[i].frozen; };
    if (hyper_.clip_norm > 0) {
      double sq = 0.0;
      for (size_t i = 0; i < grads.size(); ++i)
        if (active(i)) sq += grads[i].squaredNorm();
      const double norm = std::sqrt(sq);
      if (norm > hyper_.clip_norm)
        for (size_t i = 0; i < grads.size(); ++i)
          if (active(i)) grads[i] *= hyper_.clip_norm / norm;
    }
    ++t_;
    for (size_t i = 0; i < grads.size(); ++i) {
      if (!active(i)) continue;
      if (hyper_.optimizer == "adam") {
        constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        first_[i] = b1 * first_[i] + (1 - b1) * grads[i];
        second_[i] = b2 * second_[i] + (1 - b2) * grads[i].cwiseAbs2();
        const double c1 = 1 - std::pow(b1, t_), c2 = 1 - std::pow(b2, t_);
        tensors[i].value.array() -=
            lr_ * (first_[i].array() / c1) / ((second_[i].array() / c2).sqrt() + eps);
      } else if (hyper_.momentum > 0) {
        first_[i] = hyper_.momentum * first_[i] + grads[i];
        tensors[i].value -= lr_ * first_[i];
      } else {
        tensors[i].value -= lr_ * grads[i];
      }
    }
  }

  void Decay() { lr_ *= hyper_.lr_decay; }
  double learning_rate() const { return lr_; }

 private:
  TrainHyper hyper_;
  double lr_;
  Gradients first_, second_;
  int t_ = 0;
};

namespace internal {

// Mean-of-batch training. `loss_fn(example index, grads)` returns the loss of
// one example and accumulates its gradient.
template <typename LossFn>
TrainStats RunEpochs(HybridModel& model, size_t num_examples, const TrainHyper& hyper,
                     const std::vector<bool>& trainable, LossFn&& loss_fn, const ProgressFn& progress) {
  if (hyper.batch_size < 1 || hyper.epochs < 0) throw Error(ErrorKind::kInvalidInput, "bad batch size or epoch count");
  TrainStats stats;
  Optimizer opt(model, hyper);
  std::mt19937_64 rng(hyper.seed);
  std::vector<size_t> order(num_examples);
  std::iota(order.begin(), order.end(), size_t{0});
  Gradients grads = model.ZeroGradients(), example = model.ZeroGradients();
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_sum = 0.0;
    int epoch_n = 0;
    for (size_t begin = 0; begin < order.size(); begin += hyper.batch_size) {
      if (hyper.max_steps > 0 && stats.steps >= hyper.max_steps) break;
      for (auto& g : grads) g.setZero();
      double batch_sum = 0.0;
      int batch_n = 0;
      const size_t end = std::min(order.size(), begin + hyper.batch_size);
      for (size_t k = begin; k < end; ++k) {
        for (auto& g : example) g.setZero();
        const double loss = loss_fn(order[k], example);
        if (std::isnan(loss))
          throw Error(ErrorKind::kDivergence, "NaN loss at step " + std::to_string(stats.steps) + " (example " +
                                                  std::to_string(order[k]) + ")");
        if (!std::isfinite(loss)) {
          ++stats.skipped;
          continue;
        }
        for (size_t i = 0; i < grads.size(); ++i) grads[i] += example[i];
        batch_sum += loss;
        ++batch_n;
      }
      if (batch_n == 0) continue;
      for (auto& g : grads) g /= batch_n;
      for (const auto& g : grads)
        if (!g.allFinite()) throw Error(ErrorKind::kDivergence, "non-finite gradient at step " + std::to_string(stats.steps));
      opt.Step(model, grads, trainable);
      stats.step_loss.push_back(batch_sum / batch_n);
      ++stats.steps;
      epoch_sum += batch_sum;
      epoch_n += batch_n;
    }
    const double mean = epoch_n ? epoch_sum / epoch_n : 0.0;
    stats.epoch_loss.push_back(mean);
    if (progress) progress(epoch, mean);
    opt.Decay();
  }
  return stats;
}

}  // namespace internal

/// Word stage: shared stack and word head are trainable.
inline TrainStats TrainWordStage(HybridModel& model, std::span<const TrainExample> data, const TrainHyper& hyper,
                                 const ProgressFn& progress = {}) {
  model.FreezeShared(false);
  std::vector<bool> trainable(model.tensors().size());
  for (size_t i = 0; i < trainable.size(); ++i) trainable[i] = model.IsShared(i) || model.IsWordHead(i);
  auto stats = internal::RunEpochs(
      model, data.size(), hyper, trainable,
      [&](size_t idx, Gradients& g) { return model.Loss(data[idx].features, &data[idx].labels, nullptr, &g).loss; },
      progress);
  model.set_stage(Stage::kWord);
  return stats;
}

/// Char stage: freezes the shared stack, then trains only the char head.
/// Shared-stack outputs are computed once up front since they cannot change.
inline TrainStats TrainCharStage(HybridModel& model, std::span<const TrainExample> data, const TrainHyper& hyper,
                                 const ProgressFn& progress = {}) {
  model.FreezeShared(true);
  std::vector<bool> trainable(model.tensors().size());
  for (size_t i = 0; i < trainable.size(); ++i) trainable[i] = model.IsCharHead(i);
  std::vector<Matrix> shared;
  shared.reserve(data.size());
  for (const auto& ex : data) shared.push_back(model.SharedForward(model.Stack(ex.features)));
  auto stats = internal::RunEpochs(
      model, data.size(), hyper, trainable,
      [&](size_t idx, Gradients& g) { return model.CharHeadLoss(shared[idx], data[idx].labels, &g, nullptr).loss; },
      progress);
  model.set_stage(Stage::kChar);
  return stats;
}

/// Mean CTC loss of one head over feasible examples.
inline double MeanHeadLoss(const HybridModel& model, std::span<const TrainExample> data, Head head) {
  double sum = 0.0;
  int n = 0;
  for (const auto& ex : data) {
    const auto r = head == Head::kWord ? model.Loss(ex.features, &ex.labels, nullptr, nullptr)
                                       : model.Loss(ex.features, nullptr, &ex.labels, nullptr);
    if (!std::isfinite(r.loss)) continue;
    sum += r.loss;
    ++n;
  }
  return n ? sum / n : 0.0;
}

}  // namespace hyctc
