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

#ifndef DCOLLAB_CONTAINER_HPP_
#define DCOLLAB_CONTAINER_HPP_

// JSON container for fitted mappers and trained models. Matrices are stored
// row-major with shortest round-trip decimal doubles, so save/load is exact.
//
//   {"format": "dcollab-container", "version": 1, "kind": "mapper", ...}

#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "dcollab/error.hpp"
#include "dcollab/learner.hpp"
#include "dcollab/mapper.hpp"

namespace dcollab {

inline constexpr const char* kContainerFormat = "dcollab-container";
inline constexpr int kContainerVersion = 1;

namespace detail {

inline nlohmann::ordered_json matrix_to_json(const Matrix& m) {
  nlohmann::ordered_json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index c = 0; c < m.cols(); ++c) data.push_back(m(i, c));
  }
  j["data"] = std::move(data);
  return j;
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Index>();
  const auto cols = j.at("cols").get<Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size()) {
    throw LoadError("container matrix shape does not match its data");
  }
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index c = 0; c < cols; ++c) m(i, c) = data[static_cast<std::size_t>(i * cols + c)];
  }
  return m;
}

inline nlohmann::ordered_json header(const char* kind) {
  nlohmann::ordered_json j;
  j["format"] = kContainerFormat;
  j["version"] = kContainerVersion;
  j["kind"] = kind;
  return j;
}

inline nlohmann::json parse_container(const std::string& text, const char* kind) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("container is not valid JSON: ") + e.what());
  }
  if (j.value("format", "") != kContainerFormat ||
      j.value("version", 0) != kContainerVersion || j.value("kind", "") != kind) {
    throw LoadError(std::string("not a version-1 ") + kind + " container");
  }
  return j;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

inline std::string serialize(const Mapper& f) {
  auto j = detail::header("mapper");
  j["mapper"] = std::string(to_string(f.kind()));
  j["seed"] = f.seed();
  j["projection"] = detail::matrix_to_json(f.projection());
  j["mean"] = detail::matrix_to_json(f.mean());
  return j.dump(1);
}

inline Mapper deserialize_mapper(const std::string& text) {
  const auto j = detail::parse_container(text, "mapper");
  try {
    const Matrix mean = detail::matrix_from_json(j.at("mean"));
    return Mapper(parse_mapper_kind(j.at("mapper").get<std::string>()),
                  detail::matrix_from_json(j.at("projection")), Vector(mean.col(0)),
                  j.at("seed").get<std::uint64_t>());
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed mapper container: ") + e.what());
  }
}

inline std::string serialize(const TrainedModel& model) {
  auto j = detail::header("model");
  j["learner"] = std::string(to_string(model.kind));
  j["classes"] = model.classes;
  j["input_dim"] = model.input_dim;
  if (model.kind == LearnerKind::kLeastSquares) {
    j["ridge"] = model.ridge;
    j["w"] = detail::matrix_to_json(model.w);
  } else {
    j["k"] = model.k;
    j["train_x"] = detail::matrix_to_json(model.train_x);
    j["train_labels"] = model.train_labels;
  }
  return j.dump(1);
}

inline TrainedModel deserialize_model(const std::string& text) {
  const auto j = detail::parse_container(text, "model");
  try {
    TrainedModel m;
    m.kind = parse_learner_kind(j.at("learner").get<std::string>());
    m.classes = j.at("classes").get<std::vector<std::string>>();
    m.input_dim = j.at("input_dim").get<Index>();
    if (m.kind == LearnerKind::kLeastSquares) {
      m.ridge = j.at("ridge").get<double>();
      m.w = detail::matrix_from_json(j.at("w"));
    } else {
      m.k = j.at("k").get<int>();
      m.train_x = detail::matrix_from_json(j.at("train_x"));
      m.train_labels = j.at("train_labels").get<std::vector<std::uint32_t>>();
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed model container: ") + e.what());
  }
}

inline void save_mapper(const std::string& path, const Mapper& f) {
  detail::write_text(path, serialize(f));
}
inline Mapper load_mapper(const std::string& path) {
  return deserialize_mapper(detail::read_text(path));
}
inline void save_model(const std::string& path, const TrainedModel& m) {
  detail::write_text(path, serialize(m));
}
inline TrainedModel load_model(const std::string& path) {
  return deserialize_model(detail::read_text(path));
}

}  // namespace dcollab

#endif  // DCOLLAB_CONTAINER_HPP_
