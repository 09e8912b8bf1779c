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

#ifndef DCOLLAB_LEARNER_HPP_
#define DCOLLAB_LEARNER_HPP_

// Supervised learners trained on the collaboration representation.
//
// The least-squares (ridge) classifier is the reference learner: for
// lambda = 0 and a full-row-rank training matrix its argmax predictions are
// unchanged when both training and test features are multiplied by the same
// invertible matrix. The k-nearest-neighbour classifier has no such
// invariance and is kept as a contrast.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dcollab/error.hpp"
#include "dcollab/linalg.hpp"

namespace dcollab {

// Class table plus one class index per sample.
struct LabelMatrix {
  std::vector<std::string> classes;
  std::vector<std::uint32_t> indices;

  std::size_t size() const noexcept { return indices.size(); }
  const std::string& name(std::size_t k) const { return classes.at(indices.at(k)); }

  Matrix onehot() const {
    Matrix out = Matrix::Zero(static_cast<Index>(classes.size()),
                              static_cast<Index>(indices.size()));
    for (std::size_t k = 0; k < indices.size(); ++k) {
      out(indices[k], static_cast<Index>(k)) = 1.0;
    }
    return out;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(indices.size());
    for (auto i : indices) out.push_back(classes.at(i));
    return out;
  }

  void validate() const {
    if (classes.empty()) throw ValidationError("label table has no classes");
    for (auto i : indices) {
      if (i >= classes.size()) {
        throw ValidationError("label index " + std::to_string(i) +
                              " outside class table of size " +
                              std::to_string(classes.size()));
      }
    }
  }

  // Indexes `names` against `class_table`, or against the sorted distinct
  // names when no table is given.
  static LabelMatrix from_names(const std::vector<std::string>& names,
                                std::vector<std::string> class_table = {}) {
    if (class_table.empty()) {
      class_table = names;
      std::sort(class_table.begin(), class_table.end());
      class_table.erase(std::unique(class_table.begin(), class_table.end()),
                        class_table.end());
    }
    std::map<std::string, std::uint32_t, std::less<>> lookup;
    for (std::size_t i = 0; i < class_table.size(); ++i) {
      lookup.emplace(class_table[i], static_cast<std::uint32_t>(i));
    }
    LabelMatrix out;
    out.classes = std::move(class_table);
    out.indices.reserve(names.size());
    for (const auto& n : names) {
      auto it = lookup.find(n);
      if (it == lookup.end()) {
        throw ValidationError("label '" + n + "' not in class table");
      }
      out.indices.push_back(it->second);
    }
    return out;
  }

  friend bool operator==(const LabelMatrix&, const LabelMatrix&) = default;
};

// Sorted union of several class tables.
inline std::vector<std::string> merge_classes(
    const std::vector<std::vector<std::string>>& tables) {
  std::vector<std::string> all;
  for (const auto& t : tables) all.insert(all.end(), t.begin(), t.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

inline LabelMatrix concat_labels(const std::vector<LabelMatrix>& parts) {
  std::vector<std::vector<std::string>> tables;
  std::vector<std::string> names;
  for (const auto& p : parts) {
    tables.push_back(p.classes);
    auto n = p.names();
    names.insert(names.end(), n.begin(), n.end());
  }
  return LabelMatrix::from_names(names, merge_classes(tables));
}

enum class LearnerKind { kLeastSquares, kKnn };

inline std::string_view to_string(LearnerKind kind) {
  return kind == LearnerKind::kLeastSquares ? "least-squares" : "knn";
}

inline LearnerKind parse_learner_kind(std::string_view name) {
  if (name == "least-squares") return LearnerKind::kLeastSquares;
  if (name == "knn") return LearnerKind::kKnn;
  throw ConfigError("unknown learner kind '" + std::string(name) + "'");
}

struct LearnerParams {
  LearnerKind kind = LearnerKind::kLeastSquares;
  double ridge = 1e-8;
  int k = 5;
};

struct TrainedModel {
  LearnerKind kind = LearnerKind::kLeastSquares;
  std::vector<std::string> classes;
  Index input_dim = 0;
  // least-squares
  Matrix w;  // classes x input_dim
  double ridge = 0.0;
  // knn
  Matrix train_x;
  std::vector<std::uint32_t> train_labels;
  int k = 1;
};

// Ridge solution W = argmin ||L - W X||^2 + ridge ||W||^2, computed from the
// SVD of X as W = L V diag(s / (s^2 + ridge)) U^T. Singular values under the
// pseudoinverse cutoff are dropped, so ridge = 0 gives W = L X^+.
inline Matrix ridge_solve(const Matrix& x, const Matrix& targets, double ridge) {
  const SvdResult s = svd_full(x);
  const Index rank =
      s.sigma(0) > 0.0 ? numerical_rank(s.sigma, x.rows(), x.cols()) : 0;
  Matrix projected = targets * s.vt.topRows(rank).transpose();
  for (Index j = 0; j < rank; ++j) {
    const double sv = s.sigma(j);
    projected.col(j) *= sv / (sv * sv + ridge);
  }
  return projected * s.u.leftCols(rank).transpose();
}

inline TrainedModel train(const Matrix& x_hat, const LabelMatrix& labels,
                          const LearnerParams& params) {
  labels.validate();
  require_valid(x_hat, "training features");
  if (static_cast<std::size_t>(x_hat.cols()) != labels.size()) {
    throw DimensionError("training features have " +
                         std::to_string(x_hat.cols()) + " samples but " +
                         std::to_string(labels.size()) + " labels");
  }
  TrainedModel model;
  model.kind = params.kind;
  model.classes = labels.classes;
  model.input_dim = x_hat.rows();
  if (params.kind == LearnerKind::kLeastSquares) {
    if (!(params.ridge >= 0.0) || !std::isfinite(params.ridge)) {
      throw ValidationError("ridge must be finite and nonnegative");
    }
    model.ridge = params.ridge;
    model.w = ridge_solve(x_hat, labels.onehot(), params.ridge);
  } else {
    if (params.k < 1) throw ValidationError("knn needs k >= 1");
    model.k = params.k;
    model.train_x = x_hat;
    model.train_labels = labels.indices;
  }
  return model;
}

namespace detail {

// Index of the largest entry; ties go to the lowest index.
template <typename Scores>
std::uint32_t argmax_lowest(const Scores& scores) {
  std::uint32_t best = 0;
  for (Index i = 1; i < static_cast<Index>(scores.size()); ++i) {
    if (scores[i] > scores[best]) best = static_cast<std::uint32_t>(i);
  }
  return best;
}

}  // namespace detail

// Raw least-squares scores W x, one column per sample.
inline Matrix decision_scores(const TrainedModel& model, const Matrix& x) {
  if (model.kind != LearnerKind::kLeastSquares) {
    throw ValidationError("decision scores exist only for least-squares models");
  }
  if (x.rows() != model.input_dim) {
    throw DimensionError("model expects " + std::to_string(model.input_dim) +
                         " features, got " + shape_string(x));
  }
  return multiply_columns(model.w, x);
}

inline LabelMatrix predict(const TrainedModel& model, const Matrix& x) {
  if (x.rows() != model.input_dim) {
    throw DimensionError("model expects " + std::to_string(model.input_dim) +
                         " features, got " + shape_string(x));
  }
  LabelMatrix out;
  out.classes = model.classes;
  out.indices.reserve(static_cast<std::size_t>(x.cols()));
  if (model.kind == LearnerKind::kLeastSquares) {
    const Matrix scores = decision_scores(model, x);
    for (Index j = 0; j < scores.cols(); ++j) {
      std::vector<double> col(scores.col(j).data(),
                              scores.col(j).data() + scores.rows());
      out.indices.push_back(detail::argmax_lowest(col));
    }
    return out;
  }
  const Index n = model.train_x.cols();
  const Index k = std::min<Index>(model.k, n);
  std::vector<std::pair<double, Index>> dist(static_cast<std::size_t>(n));
  for (Index j = 0; j < x.cols(); ++j) {
    for (Index t = 0; t < n; ++t) {
      dist[t] = {(model.train_x.col(t) - x.col(j)).squaredNorm(), t};
    }
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    std::vector<int> votes(model.classes.size(), 0);
    for (Index t = 0; t < k; ++t) ++votes[model.train_labels[dist[t].second]];
    out.indices.push_back(detail::argmax_lowest(votes));
  }
  return out;
}

// Fraction of samples whose predicted class name equals the true one.
inline double accuracy(const LabelMatrix& predicted, const LabelMatrix& truth) {
  if (predicted.size() != truth.size()) {
    throw ValidationError("accuracy: " + std::to_string(predicted.size()) +
                          " predictions vs " + std::to_string(truth.size()) +
                          " labels");
  }
  if (truth.size() == 0) throw ValidationError("accuracy of an empty set");
  std::size_t hits = 0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    if (predicted.name(k) == truth.name(k)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace dcollab

#endif  // DCOLLAB_LEARNER_HPP_
