// hyctc/matrix.hpp

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

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hyctc/error.hpp"

namespace hyctc {

/// Row-major dense matrix; rows are frames, columns are units or features.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

inline double LogAdd(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

/// Row-wise log of the normalized exponential.
inline Matrix LogSoftmaxRows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    const double max = logits.row(t).maxCoeff();
    const double lse = max + std::log((logits.row(t).array() - max).exp().sum());
    out.row(t) = logits.row(t).array() - lse;
  }
  return out;
}

// Binary matrix container, little-endian:
//   magic "HCTM" | u32 version | u64 rows | u64 cols | i64 blank_id (-1 when
//   not a lattice) | rows*cols f64 row-major.
inline constexpr char kMatrixMagic[4] = {'H', 'C', 'T', 'M'};
inline constexpr std::uint32_t kMatrixVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "binary containers assume a little-endian host");

struct MatrixHeader {
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  std::int64_t blank_id = -1;
};

namespace internal {

template <typename T>
void WritePod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T ReadPod(std::istream& is, const char* what) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (is.gcount() != static_cast<std::streamsize>(sizeof(T)))
    throw Error(ErrorKind::kFormat, std::string("truncated container while reading ") + what);
  return v;
}

}  // namespace internal

inline void WriteMatrixBinary(std::ostream& os, const Matrix& m, std::int64_t blank_id = -1) {
  os.write(kMatrixMagic, 4);
  internal::WritePod(os, kMatrixVersion);
  internal::WritePod(os, static_cast<std::uint64_t>(m.rows()));
  internal::WritePod(os, static_cast<std::uint64_t>(m.cols()));
  internal::WritePod(os, blank_id);
  os.write(reinterpret_cast<const char*>(m.data()),
           static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!os) throw Error(ErrorKind::kIo, "failed writing matrix container");
}

inline Matrix ReadMatrixBinary(std::istream& is, MatrixHeader* header = nullptr) {
  char magic[4] = {};
  is.read(magic, 4);
  if (is.gcount() != 4 || std::memcmp(magic, kMatrixMagic, 4) != 0)
    throw Error(ErrorKind::kFormat, "bad magic in matrix container");
  const auto version = internal::ReadPod<std::uint32_t>(is, "version");
  if (version != kMatrixVersion)
    throw Error(ErrorKind::kVersion,
                "unsupported matrix container version " + std::to_string(version));
  MatrixHeader h;
  h.rows = internal::ReadPod<std::uint64_t>(is, "rows");
  h.cols = internal::ReadPod<std::uint64_t>(is, "cols");
  h.blank_id = internal::ReadPod<std::int64_t>(is, "blank_id");
  if (h.rows > (1ULL << 32) || h.cols > (1ULL << 32))
    throw Error(ErrorKind::kFormat, "implausible matrix dimensions in container");
  Matrix m(static_cast<Eigen::Index>(h.rows), static_cast<Eigen::Index>(h.cols));
  const auto bytes = static_cast<std::streamsize>(m.size() * sizeof(double));
  is.read(reinterpret_cast<char*>(m.data()), bytes);
  if (is.gcount() != bytes) throw Error(ErrorKind::kFormat, "truncated matrix payload");
  if (header) *header = h;
  return m;
}

inline void SaveMatrixFile(const std::string& path, const Matrix& m, std::int64_t blank_id = -1) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::kIo, "cannot open " + path + " for writing");
  WriteMatrixBinary(os, m, blank_id);
}

inline Matrix LoadMatrixFile(const std::string& path, MatrixHeader* header = nullptr) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::kIo, "cannot open " + path);
  return ReadMatrixBinary(is, header);
}

/// CSV debug form: header `t,v0,...,v{V-1}`, one row per frame.
inline void WriteMatrixCsv(std::ostream& os, const Matrix& m) {
  os << 't';
  for (Eigen::Index v = 0; v < m.cols(); ++v) os << ",v" << v;
  os << '\n';
  os << std::setprecision(17);
  for (Eigen::Index t = 0; t < m.rows(); ++t) {
    os << t;
    for (Eigen::Index v = 0; v < m.cols(); ++v) os << ',' << m(t, v);
    os << '\n';
  }
}

inline Matrix ReadMatrixCsv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.empty() || line[0] != 't')
    throw Error(ErrorKind::kFormat, "csv lattice missing `t,...` header");
  const auto cols = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ','));
  std::vector<double> values;
  Eigen::Index rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    if (std::stoll(cell) != rows) throw Error(ErrorKind::kFormat, "csv frame index out of order");
    Eigen::Index n = 0;
    while (std::getline(ss, cell, ',')) {
      // strtod understands "inf"/"-inf", which ostream emits for log-zero.
      values.push_back(std::strtod(cell.c_str(), nullptr));
      ++n;
    }
    if (n != cols) throw Error(ErrorKind::kFormat, "csv row width mismatch at frame " + std::to_string(rows));
    ++rows;
  }
  Matrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

}  // namespace hyctc
