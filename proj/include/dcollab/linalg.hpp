/*
 * Copyright 2026 The dcollab Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DCOLLAB_LINALG_HPP_
#define DCOLLAB_LINALG_HPP_

// Dense linear algebra used throughout the library. Matrices hold one data
// sample per column.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "dcollab/error.hpp"

namespace dcollab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline std::string shape_string(const Matrix& a) {
  return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

// Checks the matrix invariants: non-empty, every entry finite.
inline void require_valid(const Matrix& a, const std::string& what) {
  if (a.rows() < 1 || a.cols() < 1) {
    throw DimensionError(what + " must be non-empty, got " + shape_string(a));
  }
  if (!a.allFinite()) {
    throw ValidationError(what + " contains a non-finite entry");
  }
}

struct SvdResult {
  Matrix u;      // left singular vectors, orthonormal columns
  Vector sigma;  // nonincreasing, nonnegative
  Matrix vt;     // right singular vectors, transposed
};

namespace detail {

// Flips each singular pair so that the largest-magnitude entry of the left
// vector is nonnegative. Ties go to the lowest row index.
inline void fix_signs(SvdResult& s) {
  for (Index j = 0; j < s.u.cols(); ++j) {
    Index best = 0;
    double best_abs = -1.0;
    for (Index i = 0; i < s.u.rows(); ++i) {
      const double v = std::abs(s.u(i, j));
      if (v > best_abs) {
        best_abs = v;
        best = i;
      }
    }
    if (s.u(best, j) < 0.0) {
      s.u.col(j) = -s.u.col(j);
      s.vt.row(j) = -s.vt.row(j);
    }
  }
}

}  // namespace detail

// Thin SVD keeping all min(rows, cols) triplets.
inline SvdResult svd_full(const Matrix& a) {
  require_valid(a, "svd input");
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdResult out{svd.matrixU(), svd.singularValues(),
                svd.matrixV().transpose()};
  detail::fix_signs(out);
  return out;
}

// The k dominant singular triplets of `a`.
inline SvdResult svd_truncated(const Matrix& a, Index k) {
  const Index limit = std::min(a.rows(), a.cols());
  if (k < 1 || k > limit) {
    throw DimensionError("svd_truncated: k=" + std::to_string(k) +
                         " outside [1, " + std::to_string(limit) + "] for " +
                         shape_string(a));
  }
  SvdResult full = svd_full(a);
  return SvdResult{full.u.leftCols(k), full.sigma.head(k),
                   full.vt.topRows(k)};
}

// Singular values at or below this are treated as zero.
inline double rank_tolerance(Index rows, Index cols, double sigma_max) {
  return static_cast<double>(std::max(rows, cols)) *
         std::numeric_limits<double>::epsilon() * sigma_max;
}

inline Index numerical_rank(const Vector& sigma, Index rows, Index cols) {
  if (sigma.size() == 0) return 0;
  const double tol = rank_tolerance(rows, cols, sigma(0));
  Index rank = 0;
  for (Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > tol) ++rank;
  }
  return rank;
}

struct PseudoInverse {
  Matrix value;
  Index rank = 0;
  bool rank_deficient = false;
};

inline PseudoInverse pseudoinverse_with_rank(const Matrix& a) {
  const SvdResult s = svd_full(a);
  const Index rank = numerical_rank(s.sigma, a.rows(), a.cols());
  Matrix pinv = Matrix::Zero(a.cols(), a.rows());
  for (Index k = 0; k < rank; ++k) {
    pinv.noalias() += (s.vt.row(k).transpose() / s.sigma(k)) *
                      s.u.col(k).transpose();
  }
  return PseudoInverse{std::move(pinv), rank,
                       rank < std::min(a.rows(), a.cols())};
}

// Moore-Penrose pseudoinverse with the max(rows, cols) * eps * sigma_max
// rank cutoff.
inline Matrix pseudoinverse(const Matrix& a) {
  return pseudoinverse_with_rank(a).value;
}

// Minimum-norm solution of min_W ||B - W A||_F, i.e. W = B A^+.
// Samples are columns in both A and B.
inline Matrix lstsq(const Matrix& a, const Matrix& b) {
  require_valid(b, "lstsq right-hand side");
  if (a.cols() != b.cols()) {
    throw DimensionError("lstsq: A is " + shape_string(a) + " but B is " +
                         shape_string(b) + "; column counts must match");
  }
  return b * pseudoinverse(a);
}

// lhs * x evaluated one column at a time with a fixed summation order, so
// the result for a column never depends on which other columns are present.
inline Matrix multiply_columns(const Matrix& lhs, const Matrix& x) {
  if (lhs.cols() != x.rows()) {
    throw DimensionError("cannot multiply " + shape_string(lhs) + " by " +
                         shape_string(x));
  }
  Matrix out(lhs.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    for (Index i = 0; i < lhs.rows(); ++i) {
      double acc = 0.0;
      for (Index k = 0; k < lhs.cols(); ++k) acc += lhs(i, k) * x(k, j);
      out(i, j) = acc;
    }
  }
  return out;
}

inline Matrix gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) out(i, j) = normal(rng);
  }
  return out;
}

inline Matrix hstack(const std::vector<Matrix>& blocks) {
  if (blocks.empty()) return Matrix();
  Index cols = 0;
  for (const auto& b : blocks) {
    if (b.rows() != blocks.front().rows()) {
      throw DimensionError("hstack: row counts differ");
    }
    cols += b.cols();
  }
  Matrix out(blocks.front().rows(), cols);
  Index at = 0;
  for (const auto& b : blocks) {
    out.middleCols(at, b.cols()) = b;
    at += b.cols();
  }
  return out;
}

}  // namespace dcollab

#endif  // DCOLLAB_LINALG_HPP_
