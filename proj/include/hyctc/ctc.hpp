// hyctc/ctc.hpp

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

// CTC primitives over per-frame log posteriors: path collapse, the
// forward-backward loss with logit gradients, greedy decoding, and an
// exhaustive-enumeration reference used by the tests.

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hyctc/error.hpp"
#include "hyctc/matrix.hpp"

namespace hyctc {

using TokenId = int;
using LabelSequence = std::vector<TokenId>;
using Path = std::vector<TokenId>;

/// T x V matrix of log P(unit | frame). Immutable and validated on
/// construction: every row must normalize to 1 within 1e-6.
class LogPosteriorLattice {
 public:
  static constexpr double kRowSumTolerance = 1e-6;

  LogPosteriorLattice(Matrix log_probs, TokenId blank_id)
      : values_(std::move(log_probs)), blank_id_(blank_id) {
    Validate();
  }

  /// Applies the row-wise log-softmax to unnormalized scores.
  static LogPosteriorLattice FromLogits(const Matrix& logits, TokenId blank_id) {
    for (Eigen::Index i = 0; i < logits.size(); ++i)
      if (!std::isfinite(logits.data()[i]))
        throw Error(ErrorKind::kInvalidInput, "non-finite logit");
    return LogPosteriorLattice(LogSoftmaxRows(logits), blank_id);
  }

  int frames() const { return static_cast<int>(values_.rows()); }
  int vocab_size() const { return static_cast<int>(values_.cols()); }
  TokenId blank_id() const { return blank_id_; }
  double operator()(int t, TokenId v) const { return values_(t, v); }
  const Matrix& values() const { return values_; }

 private:
  void Validate() const {
    if (values_.rows() < 1) throw Error(ErrorKind::kInvalidInput, "lattice needs at least one frame");
    if (values_.cols() < 2) throw Error(ErrorKind::kInvalidInput, "lattice needs at least two units");
    if (blank_id_ < 0 || blank_id_ >= values_.cols())
      throw Error(ErrorKind::kInvalidInput, "blank_id out of range");
    for (Eigen::Index t = 0; t < values_.rows(); ++t) {
      double sum = 0.0;
      for (Eigen::Index v = 0; v < values_.cols(); ++v) {
        const double x = values_(t, v);
        if (std::isnan(x) || x == std::numeric_limits<double>::infinity())
          throw Error(ErrorKind::kInvalidInput,
                      "lattice entry at frame " + std::to_string(t) + " is NaN or +inf");
        sum += std::exp(x);
      }
      if (std::abs(sum - 1.0) > kRowSumTolerance)
        throw Error(ErrorKind::kInvalidInput,
                    "lattice row " + std::to_string(t) + " does not normalize (sum=" +
                        std::to_string(sum) + ")");
    }
  }

  Matrix values_;
  TokenId blank_id_;
};

/// Merges adjacent duplicates, then drops blanks.
inline LabelSequence Collapse(std::span<const TokenId> path, TokenId blank_id, int vocab_size) {
  LabelSequence out;
  TokenId prev = -1;
  for (TokenId tok : path) {
    if (tok < 0 || tok >= vocab_size)
      throw Error(ErrorKind::kInvalidInput, "path token " + std::to_string(tok) + " out of range");
    if (tok != prev && tok != blank_id) out.push_back(tok);
    prev = tok;
  }
  return out;
}

/// Minimum number of frames needed to emit `labels`: one per label plus a
/// separating blank for every adjacent repeat.
inline int RequiredFrames(std::span<const TokenId> labels) {
  int n = static_cast<int>(labels.size());
  for (size_t i = 1; i < labels.size(); ++i)
    if (labels[i] == labels[i - 1]) ++n;
  return n;
}

struct CtcResult {
  double loss = 0.0;       // -ln P(labels | x), nats
  bool feasible = true;    // false when T is too short for the labels
  std::optional<Matrix> grad;  // d loss / d logits, T x V

  bool finite() const { return std::isfinite(loss); }
};

namespace internal {

inline void CheckLabels(std::span<const TokenId> labels, const LogPosteriorLattice& lat) {
  for (TokenId l : labels) {
    if (l < 0 || l >= lat.vocab_size())
      throw Error(ErrorKind::kInvalidInput, "label " + std::to_string(l) + " out of range");
    if (l == lat.blank_id()) throw Error(ErrorKind::kInvalidInput, "label sequence contains blank");
  }
}

}  // namespace internal

/// Forward-backward over the blank-interleaved label sequence, in the log
/// domain. The gradient is taken with respect to the pre-softmax scores.
inline CtcResult CtcLoss(const LogPosteriorLattice& lattice, std::span<const TokenId> labels,
                         bool want_grad) {
  internal::CheckLabels(labels, lattice);
  const int T = lattice.frames();
  const int V = lattice.vocab_size();
  const TokenId blank = lattice.blank_id();
  CtcResult result;
  if (RequiredFrames(labels) > T) {
    result.loss = std::numeric_limits<double>::infinity();
    result.feasible = false;
    return result;
  }

  const int U = static_cast<int>(labels.size());
  const int S = 2 * U + 1;
  std::vector<TokenId> ext(S, blank);
  for (int u = 0; u < U; ++u) ext[2 * u + 1] = labels[u];
  auto can_skip = [&](int s) { return s >= 2 && ext[s] != blank && ext[s] != ext[s - 2]; };

  Matrix alpha = Matrix::Constant(T, S, kLogZero);
  alpha(0, 0) = lattice(0, ext[0]);
  if (S > 1) alpha(0, 1) = lattice(0, ext[1]);
  for (int t = 1; t < T; ++t) {
    // States that cannot reach the end in the remaining frames stay at zero.
    const int s_lo = std::max(0, S - 2 * (T - t));
    const int s_hi = std::min(S - 1, 2 * t + 1);
    for (int s = s_lo; s <= s_hi; ++s) {
      double a = alpha(t - 1, s);
      if (s >= 1) a = LogAdd(a, alpha(t - 1, s - 1));
      if (can_skip(s)) a = LogAdd(a, alpha(t - 1, s - 2));
      alpha(t, s) = a + lattice(t, ext[s]);
    }
  }
  double log_prob = alpha(T - 1, S - 1);
  if (S > 1) log_prob = LogAdd(log_prob, alpha(T - 1, S - 2));
  result.loss = -log_prob;
  if (!want_grad || log_prob == kLogZero) return result;

  // beta(t, s): log probability of completing the labels from state s at t,
  // excluding the emission at t itself.
  Matrix beta = Matrix::Constant(T, S, kLogZero);
  beta(T - 1, S - 1) = 0.0;
  if (S > 1) beta(T - 1, S - 2) = 0.0;
  for (int t = T - 2; t >= 0; --t) {
    for (int s = 0; s < S; ++s) {
      double b = beta(t + 1, s) + lattice(t + 1, ext[s]);
      if (s + 1 < S) b = LogAdd(b, beta(t + 1, s + 1) + lattice(t + 1, ext[s + 1]));
      if (s + 2 < S && can_skip(s + 2)) b = LogAdd(b, beta(t + 1, s + 2) + lattice(t + 1, ext[s + 2]));
      beta(t, s) = b;
    }
  }

  Matrix grad(T, V);
  std::vector<double> occupancy(V);
  for (int t = 0; t < T; ++t) {
    std::fill(occupancy.begin(), occupancy.end(), kLogZero);
    for (int s = 0; s < S; ++s)
      occupancy[ext[s]] = LogAdd(occupancy[ext[s]], alpha(t, s) + beta(t, s));
    for (int v = 0; v < V; ++v)
      grad(t, v) = std::exp(lattice(t, v)) - std::exp(occupancy[v] - log_prob);
  }
  result.grad = std::move(grad);
  return result;
}

/// Sums P(path) over every one of the V^T paths that collapses to `labels`.
/// Linear domain; refuses instances with more than 1e7 paths.
inline double BruteForceCtc(const LogPosteriorLattice& lattice, std::span<const TokenId> labels) {
  internal::CheckLabels(labels, lattice);
  const int T = lattice.frames();
  const int V = lattice.vocab_size();
  constexpr double kMaxPaths = 1e7;
  if (std::pow(static_cast<double>(V), T) > kMaxPaths)
    throw Error(ErrorKind::kSize, "brute-force enumeration exceeds 1e7 paths");

  const LabelSequence target(labels.begin(), labels.end());
  Path path(T, 0);
  double total = 0.0;
  while (true) {
    if (Collapse(path, lattice.blank_id(), V) == target) {
      double p = 1.0;
      for (int t = 0; t < T; ++t) p *= std::exp(lattice(t, path[t]));
      total += p;
    }
    int t = T - 1;
    while (t >= 0 && ++path[t] == V) path[t--] = 0;
    if (t < 0) break;
  }
  return total;
}

struct GreedyResult {
  Path alignment;
  LabelSequence labels;
};

/// Per-frame argmax (lowest id wins ties), then collapse.
inline GreedyResult GreedyDecode(const LogPosteriorLattice& lattice) {
  GreedyResult r;
  r.alignment.resize(lattice.frames());
  for (int t = 0; t < lattice.frames(); ++t) {
    Eigen::Index best = 0;
    lattice.values().row(t).maxCoeff(&best);
    r.alignment[t] = static_cast<TokenId>(best);
  }
  r.labels = Collapse(r.alignment, lattice.blank_id(), lattice.vocab_size());
  return r;
}

inline void SaveLattice(const std::string& path, const LogPosteriorLattice& lattice) {
  SaveMatrixFile(path, lattice.values(), lattice.blank_id());
}

inline LogPosteriorLattice LoadLattice(const std::string& path) {
  MatrixHeader h;
  Matrix m = LoadMatrixFile(path, &h);
  if (h.blank_id < 0) throw Error(ErrorKind::kFormat, path + " is a matrix container without a blank id");
  return LogPosteriorLattice(std::move(m), static_cast<TokenId>(h.blank_id));
}

}  // namespace hyctc
