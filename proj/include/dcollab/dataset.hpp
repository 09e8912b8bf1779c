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

#ifndef DCOLLAB_DATASET_HPP_
#define DCOLLAB_DATASET_HPP_

// CSV datasets (one sample per row, transposed to one sample per column on
// load) and the synthetic class-imbalanced multi-party generator.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dcollab/error.hpp"
#include "dcollab/learner.hpp"
#include "dcollab/linalg.hpp"
#include "dcollab/pipeline.hpp"

namespace dcollab {

struct LabeledData {
  Matrix x;  // features x samples
  std::vector<std::string> labels;
  std::vector<std::string> feature_names;
};

namespace csv {

// RFC 4180 records. Quoted fields may contain separators, doubled quotes
// and line breaks. Each record remembers the line it started on.
struct Record {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

inline std::vector<Record> parse(std::string_view text) {
  std::vector<Record> out;
  Record rec;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t line = 1;
  rec.line = 1;
  auto end_record = [&] {
    rec.fields.push_back(std::move(field));
    field.clear();
    const bool blank = rec.fields.size() == 1 && rec.fields[0].empty();
    if (!blank) out.push_back(std::move(rec));
    rec = Record{};
    field_started = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started || !field.empty()) {
          throw LoadError("line " + std::to_string(line) + ": stray quote in field");
        }
        quoted = true;
        field_started = true;
        break;
      case ',':
        rec.fields.push_back(std::move(field));
        field.clear();
        field_started = false;
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        rec.line = line;
        break;
      default:
        field.push_back(c);
    }
  }
  if (quoted) throw LoadError("unterminated quoted field at end of input");
  if (!field.empty() || !rec.fields.empty() || field_started) end_record();
  return out;
}

inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace csv

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline LabeledData parse_dataset(std::string_view text,
                                 const std::string& label_column,
                                 const std::string& source = "<memory>") {
  const auto records = csv::parse(text);
  if (records.empty()) throw LoadError(source + ": empty file");
  const auto& header = records.front().fields;
  std::size_t label_at = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == label_column) label_at = c;
  }
  if (label_at == header.size()) {
    throw LoadError(source + ": no label column '" + label_column + "'");
  }
  if (header.size() < 2) throw LoadError(source + ": no feature columns");
  if (records.size() < 2) throw LoadError(source + ": header but no samples");

  LabeledData data;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_at) data.feature_names.push_back(header[c]);
  }
  const auto m = static_cast<Index>(header.size() - 1);
  const auto n = static_cast<Index>(records.size() - 1);
  data.x.resize(m, n);
  for (Index s = 0; s < n; ++s) {
    const auto& rec = records[static_cast<std::size_t>(s) + 1];
    if (rec.fields.size() != header.size()) {
      throw LoadError(source + ": line " + std::to_string(rec.line) + " has " +
                      std::to_string(rec.fields.size()) + " fields, header has " +
                      std::to_string(header.size()));
    }
    Index f = 0;
    for (std::size_t c = 0; c < rec.fields.size(); ++c) {
      if (c == label_at) {
        data.labels.push_back(rec.fields[c]);
        continue;
      }
      const std::string& cell = rec.fields[c];
      double v = 0.0;
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      while (first < last && *first == ' ') ++first;
      while (last > first && last[-1] == ' ') --last;
      if (first < last && *first == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last || first == last || !std::isfinite(v)) {
        throw LoadError(source + ": line " + std::to_string(rec.line) +
                        ", column '" + header[c] + "': '" + cell +
                        "' is not a finite number");
      }
      data.x(f++, s) = v;
    }
  }
  return data;
}

inline LabeledData load_dataset(const std::string& path,
                                const std::string& label_column) {
  return parse_dataset(read_file(path), label_column, path);
}

inline std::string format_dataset(const LabeledData& data,
                                  const std::string& label_column) {
  if (static_cast<std::size_t>(data.x.cols()) != data.labels.size()) {
    throw DimensionError("dataset has " + std::to_string(data.x.cols()) +
                         " samples but " + std::to_string(data.labels.size()) +
                         " labels");
  }
  std::string out;
  for (Index f = 0; f < data.x.rows(); ++f) {
    const std::string name = static_cast<std::size_t>(f) < data.feature_names.size()
                                 ? data.feature_names[static_cast<std::size_t>(f)]
                                 : "x" + std::to_string(f);
    out += csv::quote(name) + ",";
  }
  out += csv::quote(label_column) + "\n";
  for (Index s = 0; s < data.x.cols(); ++s) {
    for (Index f = 0; f < data.x.rows(); ++f) {
      out += csv::format_double(data.x(f, s)) + ",";
    }
    out += csv::quote(data.labels[static_cast<std::size_t>(s)]) + "\n";
  }
  return out;
}

inline void save_dataset(const std::string& path, const LabeledData& data,
                         const std::string& label_column) {
  const std::string text = format_dataset(data, label_column);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write to '" + path + "' failed");
}

struct SynthParams {
  Index features = 10;
  int classes = 2;
  int parties = 4;
  int train_per_party = 50;
  int test_per_party = 20;
  double skew = 0.9;
  double separation = 3.0;  // distance between the closest class means
  double signal_spread = 1.0;
  double noise_spread = 0.1;
  double offset = 2.0;  // norm of the shared centroid of the class means
  std::uint64_t seed = 1;
};

// Splits `total` samples over classes with weights `w`, largest remainder
// first. Equal remainders are served in cyclic class order from `first`.
inline std::vector<int> apportion(int total, const std::vector<double>& w,
                                  std::size_t first = 0) {
  const std::size_t n = w.size();
  std::vector<int> counts(n);
  std::vector<std::pair<double, std::size_t>> rest;
  int used = 0;
  for (std::size_t c = 0; c < n; ++c) {
    const double exact = total * w[c];
    counts[c] = static_cast<int>(std::floor(exact + 1e-9));
    used += counts[c];
    rest.push_back({exact - counts[c], c});
  }
  auto rank = [&](std::size_t c) { return (c + n - first % n) % n; };
  std::sort(rest.begin(), rest.end(), [&](const auto& a, const auto& b) {
    if (std::abs(a.first - b.first) > 1e-12) return a.first > b.first;
    return rank(a.second) < rank(b.second);
  });
  for (std::size_t k = 0; used < total; ++k, ++used) ++counts[rest[k % n].second];
  return counts;
}

// Training class mix of a party: a (1 - skew) share spread uniformly and a
// skew share on the party's dominant class (party index mod classes).
inline std::vector<double> party_class_weights(const SynthParams& p, int party) {
  std::vector<double> w(static_cast<std::size_t>(p.classes),
                        (1.0 - p.skew) / p.classes);
  w[static_cast<std::size_t>(party % p.classes)] += p.skew;
  return w;
}

// A feature box that contains the generated data with high probability,
// computed from the public generator parameters only.
inline Box synth_anchor_box(const SynthParams& p) {
  const Index m = p.features;
  const Index signal = (m + 1) / 2;
  Box box{Vector(m), Vector(m)};
  for (Index f = 0; f < m; ++f) {
    const double half = f < signal ? p.offset + p.separation + 3.0 * p.signal_spread
                                   : 3.0 * p.noise_spread;
    box.lower(f) = -half;
    box.upper(f) = half;
  }
  return box;
}

inline std::string class_name(int c) { return "c" + std::to_string(c); }

// Gaussian class blobs. The first half of the features carries the class
// signal and has larger spread than the rest, so the data lies close to a
// subspace of half the dimension. Training sets are skewed per party so
// each party's minority classes are nearly absent; test sets are balanced.
inline std::vector<PartyData> synth_imbalanced(const SynthParams& p) {
  if (p.classes < 2) throw ValidationError("synthetic data needs >= 2 classes");
  if (p.parties < 1) throw ValidationError("synthetic data needs >= 1 party");
  if (p.features < 2) throw ValidationError("synthetic data needs >= 2 features");
  if (!(p.skew >= 0.0 && p.skew <= 1.0)) throw ValidationError("skew must lie in [0, 1]");
  if (p.train_per_party < p.classes || p.test_per_party < p.classes) {
    throw ValidationError("per-party sample counts must be at least the class count");
  }
  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index m = p.features;
  const Index signal = (m + 1) / 2;

  Vector spread(m);
  for (Index f = 0; f < m; ++f) spread(f) = f < signal ? p.signal_spread : p.noise_spread;
  // Class means live in the signal features, average to a point at distance
  // `offset` from the origin and have their closest pair exactly
  // `separation` apart.
  std::vector<Vector> means;
  Vector centroid = Vector::Zero(m);
  for (int c = 0; c < p.classes; ++c) {
    Vector mu = Vector::Zero(m);
    for (Index f = 0; f < signal; ++f) mu(f) = normal(rng);
    centroid += mu / p.classes;
    means.push_back(mu);
  }
  double closest = std::numeric_limits<double>::infinity();
  for (auto& mu : means) mu -= centroid;
  for (std::size_t a = 0; a < means.size(); ++a) {
    for (std::size_t b = a + 1; b < means.size(); ++b) {
      closest = std::min(closest, (means[a] - means[b]).norm());
    }
  }
  Vector shift = Vector::Zero(m);
  for (Index f = 0; f < signal; ++f) shift(f) = normal(rng);
  shift *= p.offset / shift.norm();
  for (auto& mu : means) mu = mu * (p.separation / closest) + shift;

  auto draw = [&](const std::vector<int>& counts, Matrix& x, LabelMatrix& labels) {
    int total = 0;
    for (int n : counts) total += n;
    x.resize(m, total);
    std::vector<std::string> names;
    Index col = 0;
    for (int c = 0; c < p.classes; ++c) {
      for (int k = 0; k < counts[static_cast<std::size_t>(c)]; ++k, ++col) {
        for (Index f = 0; f < m; ++f) {
          x(f, col) = means[static_cast<std::size_t>(c)](f) + spread(f) * normal(rng);
        }
        names.push_back(class_name(c));
      }
    }
    std::vector<std::string> table;
    for (int c = 0; c < p.classes; ++c) table.push_back(class_name(c));
    labels = LabelMatrix::from_names(names, table);
  };

  const std::vector<double> balanced(static_cast<std::size_t>(p.classes), 1.0 / p.classes);
  std::vector<PartyData> parties(static_cast<std::size_t>(p.parties));
  for (int i = 0; i < p.parties; ++i) {
    auto& party = parties[static_cast<std::size_t>(i)];
    const auto dominant = static_cast<std::size_t>(i % p.classes);
    draw(apportion(p.train_per_party, party_class_weights(p, i), dominant),
         party.x_train, party.labels);
    draw(apportion(p.test_per_party, balanced, dominant), party.y_test,
         party.test_labels);
  }
  return parties;
}

}  // namespace dcollab

#endif  // DCOLLAB_DATASET_HPP_
