// hyctc/lstm.hpp

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

// Uni-directional LSTM layer, row convolution and an affine output layer,
// each with an explicit forward cache and backward pass.

#pragma once

#include <cmath>
#include <vector>

#include "hyctc/matrix.hpp"

namespace hyctc {
namespace nn {

// Gate blocks in the stacked pre-activation, H columns each.
enum Gate { kInput = 0, kForget = 1, kCell = 2, kOutput = 3 };

struct LstmCache {
  Matrix x;       // T x I
  Matrix gates;   // T x 4H, post-activation
  Matrix cell;    // T x H
  Matrix tanh_cell;
  Matrix h;       // T x H
};

inline double Sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// wx: 4H x I, wh: 4H x H, b: 4H x 1. Returns T x H hidden states.
inline Matrix LstmForward(const Matrix& wx, const Matrix& wh, const Matrix& b, const Matrix& x,
                          LstmCache* cache = nullptr) {
  const Eigen::Index T = x.rows(), H = wh.cols();
  Matrix z = x * wx.transpose();
  z.rowwise() += b.col(0).transpose();
  Matrix gates(T, 4 * H), cell(T, H), tanh_cell(T, H), h(T, H);
  Eigen::RowVectorXd h_prev = Eigen::RowVectorXd::Zero(H), c_prev = Eigen::RowVectorXd::Zero(H);
  Eigen::RowVectorXd zt(4 * H);
  for (Eigen::Index t = 0; t < T; ++t) {
    zt.noalias() = z.row(t) + h_prev * wh.transpose();
    for (Eigen::Index k = 0; k < H; ++k) {
      const double i = Sigmoid(zt(kInput * H + k));
      const double f = Sigmoid(zt(kForget * H + k));
      const double g = std::tanh(zt(kCell * H + k));
      const double o = Sigmoid(zt(kOutput * H + k));
      const double c = f * c_prev(k) + i * g;
      const double tc = std::tanh(c);
      gates(t, kInput * H + k) = i;
      gates(t, kForget * H + k) = f;
      gates(t, kCell * H + k) = g;
      gates(t, kOutput * H + k) = o;
      cell(t, k) = c;
      tanh_cell(t, k) = tc;
      h(t, k) = o * tc;
    }
    h_prev = h.row(t);
    c_prev = cell.row(t);
  }
  if (cache) {
    cache->x = x;
    cache->gates = std::move(gates);
    cache->cell = std::move(cell);
    cache->tanh_cell = std::move(tanh_cell);
    cache->h = h;
  }
  return h;
}

/// Accumulates parameter gradients into dwx/dwh/db; writes the input
/// gradient to dx when it is non-null.
inline void LstmBackward(const Matrix& wx, const Matrix& wh, const LstmCache& cache, const Matrix& dh_out,
                         Matrix& dwx, Matrix& dwh, Matrix& db, Matrix* dx) {
  const Eigen::Index T = cache.x.rows(), H = wh.cols();
  Matrix dz(T, 4 * H);
  Eigen::RowVectorXd dh_next = Eigen::RowVectorXd::Zero(H), dc_next = Eigen::RowVectorXd::Zero(H);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    for (Eigen::Index k = 0; k < H; ++k) {
      const double i = cache.gates(t, kInput * H + k);
      const double f = cache.gates(t, kForget * H + k);
      const double g = cache.gates(t, kCell * H + k);
      const double o = cache.gates(t, kOutput * H + k);
      const double tc = cache.tanh_cell(t, k);
      const double c_prev = t > 0 ? cache.cell(t - 1, k) : 0.0;
      const double dh = dh_out(t, k) + dh_next(k);
      const double dc = dh * o * (1.0 - tc * tc) + dc_next(k);
      dz(t, kInput * H + k) = dc * g * i * (1.0 - i);
      dz(t, kForget * H + k) = dc * c_prev * f * (1.0 - f);
      dz(t, kCell * H + k) = dc * i * (1.0 - g * g);
      dz(t, kOutput * H + k) = dh * tc * o * (1.0 - o);
      dc_next(k) = dc * f;
    }
    dh_next.noalias() = dz.row(t) * wh;
  }
  dwx.noalias() += dz.transpose() * cache.x;
  if (T > 1) dwh.noalias() += dz.bottomRows(T - 1).transpose() * cache.h.topRows(T - 1);
  db.col(0) += dz.colwise().sum().transpose();
  if (dx) *dx = dz * wx;
}

/// out_t = sum_{c=-C..C} w[c+C] * h_{t+c}, zero outside [0, T).
inline Matrix RowConvolution(const Matrix& h, const std::vector<const Matrix*>& w) {
  const Eigen::Index T = h.rows();
  const int C = static_cast<int>(w.size() / 2);
  Matrix out = Matrix::Zero(T, w[0]->rows());
  for (int k = 0; k < static_cast<int>(w.size()); ++k) {
    const int c = k - C;
    // Rows t with 0 <= t + c < T.
    const Eigen::Index lo = std::max<Eigen::Index>(0, -c), hi = std::min<Eigen::Index>(T, T - c);
    if (hi <= lo) continue;
    out.middleRows(lo, hi - lo).noalias() += h.middleRows(lo + c, hi - lo) * w[k]->transpose();
  }
  return out;
}

inline void RowConvolutionBackward(const Matrix& h, const std::vector<const Matrix*>& w, const Matrix& dout,
                                   std::vector<Matrix*>& dw, Matrix& dh) {
  const Eigen::Index T = h.rows();
  const int C = static_cast<int>(w.size() / 2);
  dh = Matrix::Zero(T, h.cols());
  for (int k = 0; k < static_cast<int>(w.size()); ++k) {
    const int c = k - C;
    const Eigen::Index lo = std::max<Eigen::Index>(0, -c), hi = std::min<Eigen::Index>(T, T - c);
    if (hi <= lo) continue;
    dw[k]->noalias() += dout.middleRows(lo, hi - lo).transpose() * h.middleRows(lo + c, hi - lo);
    dh.middleRows(lo + c, hi - lo).noalias() += dout.middleRows(lo, hi - lo) * *w[k];
  }
}

/// w: V x I, b: V x 1. Returns T x V scores.
inline Matrix AffineForward(const Matrix& w, const Matrix& b, const Matrix& x) {
  Matrix y = x * w.transpose();
  y.rowwise() += b.col(0).transpose();
  return y;
}

inline void AffineBackward(const Matrix& w, const Matrix& x, const Matrix& dy, Matrix& dw, Matrix& db, Matrix* dx) {
  dw.noalias() += dy.transpose() * x;
  db.col(0) += dy.colwise().sum().transpose();
  if (dx) *dx = dy * w;
}

}  // namespace nn
}  // namespace hyctc
