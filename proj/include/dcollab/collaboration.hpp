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

#ifndef DCOLLAB_COLLABORATION_HPP_
#define DCOLLAB_COLLABORATION_HPP_

// Construction of the collaboration representation.
//
// Every party maps the shared anchor matrix with its private map, giving
// A_i = f_i(X_anc) with l_i rows and r columns. The target Z is chosen by
// solving the minimal perturbation problem
//
//   min sum_i ||E_i||_F^2   s.t.  G_i' (A_i + E_i) = Z   for all i,
//
// whose solution places the rows of Z in the span of the ell dominant left
// singular vectors U_1 of the stacked matrix [A_1^T, A_2^T, ..., A_d^T]
// (r x sum_i l_i). We take Z = U_1^T and then G_i = Z A_i^+, the least
// squares map from party i's anchor image onto the common target.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "dcollab/error.hpp"
#include "dcollab/linalg.hpp"

namespace dcollab {

enum class AnchorGeneration { kStandardNormal, kUniformInBox, kUserSupplied };

inline std::string_view to_string(AnchorGeneration g) {
  switch (g) {
    case AnchorGeneration::kStandardNormal: return "standard-normal";
    case AnchorGeneration::kUniformInBox: return "uniform-in-box";
    case AnchorGeneration::kUserSupplied: return "user-supplied";
  }
  return "unknown";
}

inline AnchorGeneration parse_anchor_generation(std::string_view name) {
  if (name == "standard-normal") return AnchorGeneration::kStandardNormal;
  if (name == "uniform-in-box") return AnchorGeneration::kUniformInBox;
  if (name == "user-supplied") return AnchorGeneration::kUserSupplied;
  throw ConfigError("unknown anchor generation '" + std::string(name) + "'");
}

struct AnchorSet {
  Matrix x_anc;  // m x r, shared verbatim with every party
  std::uint64_t seed = 0;
  AnchorGeneration generation = AnchorGeneration::kStandardNormal;

  Index features() const noexcept { return x_anc.rows(); }
  Index count() const noexcept { return x_anc.cols(); }
};

struct Box {
  Vector lower;
  Vector upper;
};

inline AnchorSet generate_anchor(Index m, Index r, std::uint64_t seed,
                                 AnchorGeneration generation,
                                 const std::optional<Box>& box = std::nullopt) {
  if (m < 1 || r < 1) {
    throw DimensionError("anchor needs m >= 1 and r >= 1, got m=" +
                         std::to_string(m) + " r=" + std::to_string(r));
  }
  std::mt19937_64 rng(seed);
  switch (generation) {
    case AnchorGeneration::kStandardNormal:
      return AnchorSet{gaussian_matrix(m, r, rng), seed, generation};
    case AnchorGeneration::kUniformInBox: {
      if (!box || box->lower.size() != m || box->upper.size() != m) {
        throw DimensionError("uniform-in-box anchor needs " +
                             std::to_string(m) + " lower and upper bounds");
      }
      if (!box->lower.allFinite() || !box->upper.allFinite() ||
          (box->upper.array() < box->lower.array()).any()) {
        throw ValidationError("anchor box bounds must be finite with lower <= upper");
      }
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      Matrix x(m, r);
      for (Index j = 0; j < r; ++j) {
        for (Index i = 0; i < m; ++i) {
          x(i, j) = box->lower(i) + (box->upper(i) - box->lower(i)) * unit(rng);
        }
      }
      return AnchorSet{std::move(x), seed, generation};
    }
    case AnchorGeneration::kUserSupplied:
      throw ConfigError("user-supplied anchors are passed to make_anchor");
  }
  throw ConfigError("unknown anchor generation");
}

inline AnchorSet make_anchor(Matrix x_anc) {
  require_valid(x_anc, "anchor matrix");
  return AnchorSet{std::move(x_anc), 0, AnchorGeneration::kUserSupplied};
}

struct CollaborationTarget {
  Matrix z;      // ell x r
  Vector sigma;  // every singular value of the stacked anchor matrix
};

namespace detail {

inline void check_anchor_images(const std::vector<Matrix>& anchors_tilde) {
  if (anchors_tilde.empty()) {
    throw DimensionError("collaboration needs at least one party");
  }
  const Index r = anchors_tilde.front().cols();
  for (std::size_t i = 0; i < anchors_tilde.size(); ++i) {
    const Matrix& a = anchors_tilde[i];
    require_valid(a, "anchor image of party " + std::to_string(i));
    if (a.cols() != r) {
      throw DimensionError("party " + std::to_string(i) + " anchor image has " +
                           std::to_string(a.cols()) + " columns, expected " +
                           std::to_string(r));
    }
    if (a.rows() > r) {
      throw DimensionError("party " + std::to_string(i) + " has dimension " +
                           std::to_string(a.rows()) + " above anchor count " +
                           std::to_string(r) + "; need r >= l_i");
    }
  }
}

}  // namespace detail

// Stacked matrix [A_1^T, ..., A_d^T], r x sum_i l_i.
inline Matrix stack_anchor_images(const std::vector<Matrix>& anchors_tilde) {
  std::vector<Matrix> transposed;
  transposed.reserve(anchors_tilde.size());
  for (const auto& a : anchors_tilde) transposed.push_back(a.transpose());
  return hstack(transposed);
}

inline CollaborationTarget compute_target(
    const std::vector<Matrix>& anchors_tilde, Index ell) {
  detail::check_anchor_images(anchors_tilde);
  const Matrix stacked = stack_anchor_images(anchors_tilde);
  const Index limit = std::min(stacked.rows(), stacked.cols());
  if (ell < 1 || ell > limit) {
    throw DimensionError("target dimension " + std::to_string(ell) +
                         " outside [1, " + std::to_string(limit) + "]");
  }
  SvdResult s = svd_full(stacked);
  const Index rank =
      s.sigma(0) > 0.0 ? numerical_rank(s.sigma, stacked.rows(), stacked.cols())
                       : 0;
  if (rank < ell) {
    throw RankError("stacked anchor matrix has rank " + std::to_string(rank) +
                        " below target dimension " + std::to_string(ell),
                    std::vector<double>(s.sigma.data(),
                                        s.sigma.data() + s.sigma.size()));
  }
  return CollaborationTarget{s.u.leftCols(ell).transpose(), s.sigma};
}

// G_i = Z A_i^+.
inline Matrix compute_g(const Matrix& z, const Matrix& anchor_tilde) {
  if (z.cols() != anchor_tilde.cols()) {
    throw DimensionError("target has " + std::to_string(z.cols()) +
                         " anchor columns, party image has " +
                         std::to_string(anchor_tilde.cols()));
  }
  return lstsq(anchor_tilde, z);
}

// Max over ordered party pairs (i, j) of mean_k ||a_ik - a_jk|| divided by
// mean_k ||a_ik||, where a_ik is column k of party i's aligned matrix. All
// matrices must describe the same samples in the same order.
inline double alignment_residual(const std::vector<Matrix>& aligned) {
  double worst = 0.0;
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    const double scale = aligned[i].colwise().norm().mean();
    for (std::size_t j = 0; j < aligned.size(); ++j) {
      if (i == j) continue;
      if (aligned[j].rows() != aligned[i].rows() ||
          aligned[j].cols() != aligned[i].cols()) {
        throw DimensionError("alignment residual needs equally shaped matrices");
      }
      const double gap = (aligned[i] - aligned[j]).colwise().norm().mean();
      const double value = scale > 0.0 ? gap / scale : gap;
      worst = std::max(worst, value);
    }
  }
  return worst;
}

struct CollaborationTransform {
  std::vector<Matrix> g;  // per party, ell x l_i
  Index ell = 0;
  Vector sigma;
  double alignment_residual = 0.0;
  std::vector<Index> anchor_ranks;  // numerical rank of each A_i

  std::size_t parties() const noexcept { return g.size(); }
};

struct Collaboration {
  CollaborationTransform transform;
  Matrix x_hat;  // [G_1 X_1~ | ... | G_d X_d~]
};

inline Collaboration build_collaboration(
    const std::vector<Matrix>& anchors_tilde,
    const std::vector<Matrix>& trains_tilde, Index ell) {
  if (anchors_tilde.size() != trains_tilde.size()) {
    throw DimensionError("got " + std::to_string(anchors_tilde.size()) +
                         " anchor images but " +
                         std::to_string(trains_tilde.size()) +
                         " training representations");
  }
  for (std::size_t i = 0; i < trains_tilde.size(); ++i) {
    require_valid(trains_tilde[i], "training representation of party " +
                                       std::to_string(i));
    if (trains_tilde[i].rows() != anchors_tilde[i].rows()) {
      throw DimensionError("party " + std::to_string(i) +
                           " training representation has " +
                           std::to_string(trains_tilde[i].rows()) +
                           " rows, anchor image has " +
                           std::to_string(anchors_tilde[i].rows()));
    }
  }
  CollaborationTarget target = compute_target(anchors_tilde, ell);

  Collaboration out;
  out.transform.ell = ell;
  out.transform.sigma = std::move(target.sigma);
  std::vector<Matrix> aligned_anchors;
  std::vector<Matrix> blocks;
  for (std::size_t i = 0; i < anchors_tilde.size(); ++i) {
    PseudoInverse pinv = pseudoinverse_with_rank(anchors_tilde[i]);
    Matrix g = target.z * pinv.value;
    aligned_anchors.push_back(multiply_columns(g, anchors_tilde[i]));
    blocks.push_back(multiply_columns(g, trains_tilde[i]));
    out.transform.anchor_ranks.push_back(pinv.rank);
    out.transform.g.push_back(std::move(g));
  }
  out.transform.alignment_residual = alignment_residual(aligned_anchors);
  out.x_hat = hstack(blocks);
  return out;
}

// G_party * y_tilde, the aligned test representation.
inline Matrix transform_test(const CollaborationTransform& t,
                             std::size_t party, const Matrix& y_tilde) {
  if (party >= t.g.size()) {
    throw DimensionError("no party " + std::to_string(party) + " in transform");
  }
  if (y_tilde.rows() != t.g[party].cols()) {
    throw DimensionError("party " + std::to_string(party) + " expects " +
                         std::to_string(t.g[party].cols()) +
                         "-dimensional test columns, got " +
                         shape_string(y_tilde));
  }
  return multiply_columns(t.g[party], y_tilde);
}

}  // namespace dcollab

#endif  // DCOLLAB_COLLABORATION_HPP_
