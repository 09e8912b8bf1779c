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

#ifndef DCOLLAB_MAPPER_HPP_
#define DCOLLAB_MAPPER_HPP_

// Party-private map functions. A mapper is fitted once and then applied,
// column by column, to training data, anchor data and test data alike.
// Mappers never leave the party that fitted them.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "dcollab/error.hpp"
#include "dcollab/linalg.hpp"

namespace dcollab {

enum class MapperKind { kPca, kRandomProjection, kLinearExplicit };

inline std::string_view to_string(MapperKind kind) {
  switch (kind) {
    case MapperKind::kPca: return "pca";
    case MapperKind::kRandomProjection: return "random-projection";
    case MapperKind::kLinearExplicit: return "linear-explicit";
  }
  return "unknown";
}

inline MapperKind parse_mapper_kind(std::string_view name) {
  if (name == "pca") return MapperKind::kPca;
  if (name == "random-projection") return MapperKind::kRandomProjection;
  if (name == "linear-explicit") return MapperKind::kLinearExplicit;
  throw ConfigError("unknown mapper kind '" + std::string(name) + "'");
}

// x -> P (x - mu). P is output_dim x input_dim.
class Mapper {
 public:
  Mapper(MapperKind kind, Matrix projection, Vector mean, std::uint64_t seed)
      : kind_(kind),
        projection_(std::move(projection)),
        mean_(std::move(mean)),
        seed_(seed) {
    require_valid(projection_, "mapper projection");
    if (projection_.rows() > projection_.cols()) {
      throw DimensionError("mapper output dim " +
                           std::to_string(projection_.rows()) +
                           " exceeds input dim " +
                           std::to_string(projection_.cols()));
    }
    if (mean_.size() != projection_.cols()) {
      throw DimensionError("mapper mean has length " +
                           std::to_string(mean_.size()) + ", expected " +
                           std::to_string(projection_.cols()));
    }
    if (!mean_.allFinite()) {
      throw ValidationError("mapper mean contains a non-finite entry");
    }
  }

  MapperKind kind() const noexcept { return kind_; }
  Index input_dim() const noexcept { return projection_.cols(); }
  Index output_dim() const noexcept { return projection_.rows(); }
  const Matrix& projection() const noexcept { return projection_; }
  const Vector& mean() const noexcept { return mean_; }
  std::uint64_t seed() const noexcept { return seed_; }

  Matrix apply(const Matrix& x) const {
    if (x.rows() != input_dim()) {
      throw DimensionError("mapper expects " + std::to_string(input_dim()) +
                           " features, got " + shape_string(x));
    }
    Matrix centered = x.colwise() - mean_;
    return multiply_columns(projection_, centered);
  }

  friend bool operator==(const Mapper& a, const Mapper& b) {
    return a.kind_ == b.kind_ && a.seed_ == b.seed_ &&
           a.projection_.rows() == b.projection_.rows() &&
           a.projection_.cols() == b.projection_.cols() &&
           a.projection_ == b.projection_ && a.mean_ == b.mean_;
  }

 private:
  MapperKind kind_;
  Matrix projection_;
  Vector mean_;
  std::uint64_t seed_;
};

inline Matrix apply(const Mapper& f, const Matrix& x) { return f.apply(x); }

// PCA on the columns of x: centers by the column mean and keeps the
// out_dim dominant principal directions.
inline Mapper fit_pca(const Matrix& x, Index out_dim,
                      std::uint64_t seed = 0) {
  require_valid(x, "pca training data");
  if (x.cols() < 2) {
    throw DimensionError("pca needs at least 2 samples, got " +
                         std::to_string(x.cols()));
  }
  if (out_dim < 1 || out_dim > std::min(x.rows(), x.cols())) {
    throw DimensionError("pca output dim " + std::to_string(out_dim) +
                         " outside [1, " +
                         std::to_string(std::min(x.rows(), x.cols())) + "]");
  }
  Vector mean = x.rowwise().mean();
  Matrix centered = x.colwise() - mean;
  SvdResult s = svd_full(centered);
  // A principal direction with zero variance is arbitrary, so refuse it.
  const Index rank = s.sigma(0) > 0.0
                         ? numerical_rank(s.sigma, centered.rows(),
                                          centered.cols())
                         : 0;
  if (rank < out_dim) {
    throw RankError("pca: data has " + std::to_string(rank) +
                        " directions of nonzero variance, " +
                        std::to_string(out_dim) + " requested",
                    std::vector<double>(s.sigma.data(),
                                        s.sigma.data() + s.sigma.size()));
  }
  Matrix projection = s.u.leftCols(out_dim).transpose();
  return Mapper(MapperKind::kPca, std::move(projection), std::move(mean),
                seed);
}

// Gaussian matrix with orthonormalized rows; no centering.
inline Mapper fit_random_projection(Index input_dim, Index out_dim,
                                    std::uint64_t seed) {
  if (input_dim < 1 || out_dim < 1 || out_dim > input_dim) {
    throw DimensionError("random projection: need 1 <= out_dim (" +
                         std::to_string(out_dim) + ") <= input_dim (" +
                         std::to_string(input_dim) + ")");
  }
  std::mt19937_64 rng(seed);
  Matrix draws = gaussian_matrix(out_dim, input_dim, rng);
  Eigen::HouseholderQR<Matrix> qr(draws.transpose());
  Matrix q = qr.householderQ() * Matrix::Identity(input_dim, out_dim);
  return Mapper(MapperKind::kRandomProjection, q.transpose(),
                Vector::Zero(input_dim), seed);
}

inline Mapper make_linear_mapper(Matrix projection,
                                 std::optional<Vector> mean = std::nullopt) {
  Vector mu = mean ? std::move(*mean) : Vector::Zero(projection.cols());
  return Mapper(MapperKind::kLinearExplicit, std::move(projection),
                std::move(mu), 0);
}

// How a party builds its private map from local training data.
struct MapperSpec {
  MapperKind kind = MapperKind::kPca;
  Index dim = 1;
  std::uint64_t seed = 0;
  // linear-explicit only
  std::optional<Matrix> projection;
  std::optional<Vector> mean;
};

inline Mapper fit_mapper(const MapperSpec& spec, const Matrix& x) {
  switch (spec.kind) {
    case MapperKind::kPca:
      return fit_pca(x, spec.dim, spec.seed);
    case MapperKind::kRandomProjection:
      return fit_random_projection(x.rows(), spec.dim, spec.seed);
    case MapperKind::kLinearExplicit:
      if (!spec.projection) {
        throw ConfigError("linear-explicit mapper needs a projection matrix");
      }
      if (spec.projection->cols() != x.rows()) {
        throw DimensionError("linear-explicit projection is " +
                             shape_string(*spec.projection) + " but data has " +
                             std::to_string(x.rows()) + " features");
      }
      return make_linear_mapper(*spec.projection, spec.mean);
  }
  throw ConfigError("unknown mapper kind");
}

}  // namespace dcollab

#endif  // DCOLLAB_MAPPER_HPP_
