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

#ifndef DCOLLAB_CONFIG_HPP_
#define DCOLLAB_CONFIG_HPP_

// Experiment configuration. The file format is a flat key-value tree:
//
//   # comment
//   mode = centralized, individual, collaboration
//   anchor.seed = 7
//   party.0.mapper = pca
//
// Dotted keys form the tree. Later assignments override earlier ones, which
// is how command line overrides are applied.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dcollab/collaboration.hpp"
#include "dcollab/dataset.hpp"
#include "dcollab/error.hpp"
#include "dcollab/learner.hpp"
#include "dcollab/mapper.hpp"

namespace dcollab {

using KeyValues = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t at = 0;
  while (at <= s.size()) {
    const auto comma = s.find(',', at);
    const auto piece = trim(s.substr(at, comma == std::string_view::npos ? s.npos : comma - at));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string_view::npos) break;
    at = comma + 1;
  }
  return out;
}

}  // namespace detail

// Applies one `key = value` assignment.
inline void assign(KeyValues& kv, std::string_view line, const std::string& where) {
  const auto eq = line.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError(where + ": expected 'key = value'");
  }
  const std::string key = detail::trim(line.substr(0, eq));
  if (key.empty()) throw ConfigError(where + ": empty key");
  kv[key] = detail::trim(line.substr(eq + 1));
}

inline KeyValues parse_key_values(std::string_view text, const std::string& source) {
  KeyValues kv;
  std::size_t line_no = 0;
  std::size_t at = 0;
  while (at <= text.size()) {
    const auto nl = text.find('\n', at);
    std::string_view line = text.substr(at, nl == std::string_view::npos ? text.npos : nl - at);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    if (!detail::trim(line).empty()) {
      assign(kv, line, source + ":" + std::to_string(line_no));
    }
    if (nl == std::string_view::npos) break;
    at = nl + 1;
  }
  return kv;
}

enum class Mode { kCentralized, kIndividual, kCollaboration, kCollaborationNetworked };

inline std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::kCentralized: return "centralized";
    case Mode::kIndividual: return "individual";
    case Mode::kCollaboration: return "collaboration";
    case Mode::kCollaborationNetworked: return "collaboration-networked";
  }
  return "unknown";
}

inline Mode parse_mode(std::string_view s) {
  if (s == "centralized") return Mode::kCentralized;
  if (s == "individual") return Mode::kIndividual;
  if (s == "collaboration") return Mode::kCollaboration;
  if (s == "collaboration-networked") return Mode::kCollaborationNetworked;
  throw ConfigError("unknown mode '" + std::string(s) + "'");
}

enum class ReportFormat { kHumanTable, kJsonLines };

inline ReportFormat parse_report_format(std::string_view s) {
  if (s == "human-table") return ReportFormat::kHumanTable;
  if (s == "json-lines") return ReportFormat::kJsonLines;
  throw ConfigError("unknown report format '" + std::string(s) + "'");
}

struct PartyConfig {
  MapperSpec mapper;
  std::string train_path;  // csv source only
  std::string test_path;
};

struct AnchorConfig {
  AnchorGeneration generation = AnchorGeneration::kStandardNormal;
  Index r = 0;  // 0 means 2 * max_i l_i
  std::uint64_t seed = 0;
  std::optional<Box> box;
  std::string path;  // user-supplied
};

struct NetworkConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  std::uint64_t session = 1;
  int timeout_ms = 30000;
};

struct ExperimentConfig {
  std::vector<Mode> modes;
  std::string source = "synth";  // synth | csv
  SynthParams synth;
  std::string label_column = "label";
  Index features = 0;  // csv only; lets a coordinator build anchors without data
  std::vector<PartyConfig> parties;
  AnchorConfig anchor;
  Index ell = 0;  // 0 means min_i l_i
  LearnerParams learner;
  NetworkConfig network;
  std::string output_path;
  ReportFormat format = ReportFormat::kJsonLines;
  KeyValues echo;  // effective settings, defaults filled in

  // Feature count known without loading data, 0 when unknown.
  Index known_features() const {
    return source == "synth" ? synth.features : features;
  }

  Index resolved_ell() const {
    if (ell > 0) return ell;
    Index lo = parties.front().mapper.dim;
    for (const auto& p : parties) lo = std::min(lo, p.mapper.dim);
    return lo;
  }
  Index resolved_r() const {
    if (anchor.r > 0) return anchor.r;
    Index hi = 0;
    for (const auto& p : parties) hi = std::max(hi, p.mapper.dim);
    return 2 * hi;
  }
};

namespace detail {

class KeyReader {
 public:
  explicit KeyReader(const KeyValues& kv) : kv_(kv) {}

  std::optional<std::string> get(const std::string& key) {
    used_.insert(key);
    auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    return it->second;
  }
  std::string text(const std::string& key, const std::string& fallback) {
    return get(key).value_or(fallback);
  }
  std::string required(const std::string& key) {
    auto v = get(key);
    if (!v || v->empty()) throw ConfigError("missing required setting '" + key + "'");
    return *v;
  }
  template <typename T>
  T number(const std::string& key, std::optional<T> fallback) {
    auto v = get(key);
    if (!v) {
      if (!fallback) throw ConfigError("missing required setting '" + key + "'");
      return *fallback;
    }
    return to_number<T>(key, *v);
  }
  template <typename T>
  static T to_number(const std::string& key, const std::string& s) {
    T out{};
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first < last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last || first == last) {
      throw ConfigError("setting '" + key + "': '" + s + "' is not a valid number");
    }
    return out;
  }
  Vector vector(const std::string& key, const std::string& s) {
    const auto parts = split_list(s);
    Vector v(static_cast<Index>(parts.size()));
    for (std::size_t i = 0; i < parts.size(); ++i) {
      v(static_cast<Index>(i)) = to_number<double>(key, parts[i]);
    }
    return v;
  }

  void reject_unknown() const {
    for (const auto& [key, value] : kv_) {
      if (!used_.count(key)) throw ConfigError("unknown setting '" + key + "'");
    }
  }

 private:
  const KeyValues& kv_;
  std::set<std::string> used_;
};

inline std::string format_number(double v) { return csv::format_double(v); }

}  // namespace detail

inline ExperimentConfig make_config(const KeyValues& kv) {
  detail::KeyReader in(kv);
  ExperimentConfig cfg;
  KeyValues& echo = cfg.echo;

  const std::string modes = in.text("mode", "centralized, individual, collaboration");
  for (const auto& m : detail::split_list(modes)) cfg.modes.push_back(parse_mode(m));
  if (cfg.modes.empty()) throw ConfigError("no mode selected");
  echo["mode"] = modes;

  cfg.source = in.text("data.source", "synth");
  echo["data.source"] = cfg.source;
  cfg.label_column = in.text("data.label_column", "label");
  echo["data.label_column"] = cfg.label_column;

  int party_count = 0;
  if (cfg.source == "synth") {
    auto& s = cfg.synth;
    s.features = in.number<Index>("synth.features", 10);
    s.classes = in.number<int>("synth.classes", 2);
    s.parties = in.number<int>("synth.parties", 4);
    s.train_per_party = in.number<int>("synth.train_per_party", 50);
    s.test_per_party = in.number<int>("synth.test_per_party", 20);
    s.skew = in.number<double>("synth.skew", 0.9);
    s.separation = in.number<double>("synth.separation", s.separation);
    s.signal_spread = in.number<double>("synth.signal_spread", s.signal_spread);
    s.noise_spread = in.number<double>("synth.noise_spread", s.noise_spread);
    s.offset = in.number<double>("synth.offset", s.offset);
    s.seed = in.number<std::uint64_t>("synth.seed", std::nullopt);
    echo["synth.features"] = std::to_string(s.features);
    echo["synth.classes"] = std::to_string(s.classes);
    echo["synth.parties"] = std::to_string(s.parties);
    echo["synth.train_per_party"] = std::to_string(s.train_per_party);
    echo["synth.test_per_party"] = std::to_string(s.test_per_party);
    echo["synth.skew"] = detail::format_number(s.skew);
    echo["synth.separation"] = detail::format_number(s.separation);
    echo["synth.signal_spread"] = detail::format_number(s.signal_spread);
    echo["synth.noise_spread"] = detail::format_number(s.noise_spread);
    echo["synth.offset"] = detail::format_number(s.offset);
    echo["synth.seed"] = std::to_string(s.seed);
    party_count = s.parties;
  } else if (cfg.source == "csv") {
    party_count = in.number<int>("parties", std::nullopt);
    echo["parties"] = std::to_string(party_count);
    cfg.features = in.number<Index>("data.features", 0);
  } else {
    throw ConfigError("data.source must be 'synth' or 'csv'");
  }
  if (party_count < 1) throw ConfigError("at least one party is required");

  const auto default_kind = in.get("party.default.mapper");
  const auto default_dim = in.get("party.default.dim");
  const auto default_seed = in.get("party.default.seed");
  for (int i = 0; i < party_count; ++i) {
    const std::string prefix = "party." + std::to_string(i) + ".";
    PartyConfig p;
    auto kind = in.get(prefix + "mapper");
    if (!kind) kind = default_kind;
    p.mapper.kind = parse_mapper_kind(kind.value_or("pca"));
    if (p.mapper.kind == MapperKind::kLinearExplicit) {
      throw ConfigError(prefix + "mapper: linear-explicit maps are API-only");
    }
    auto dim = in.get(prefix + "dim");
    if (!dim) dim = default_dim;
    if (!dim) throw ConfigError("missing required setting '" + prefix + "dim'");
    p.mapper.dim = detail::KeyReader::to_number<Index>(prefix + "dim", *dim);
    if (auto seed = in.get(prefix + "seed")) {
      p.mapper.seed = detail::KeyReader::to_number<std::uint64_t>(prefix + "seed", *seed);
    } else if (default_seed) {
      p.mapper.seed = detail::KeyReader::to_number<std::uint64_t>("party.default.seed",
                                                                  *default_seed) +
                      static_cast<std::uint64_t>(i);
    } else {
      throw ConfigError("missing required setting '" + prefix + "seed'");
    }
    if (cfg.source == "csv") {
      p.train_path = in.required(prefix + "train");
      p.test_path = in.required(prefix + "test");
      echo[prefix + "train"] = p.train_path;
      echo[prefix + "test"] = p.test_path;
    }
    echo[prefix + "mapper"] = std::string(to_string(p.mapper.kind));
    echo[prefix + "dim"] = std::to_string(p.mapper.dim);
    echo[prefix + "seed"] = std::to_string(p.mapper.seed);
    cfg.parties.push_back(std::move(p));
  }

  auto& a = cfg.anchor;
  a.generation = parse_anchor_generation(in.text("anchor.generation", "standard-normal"));
  a.r = in.number<Index>("anchor.r", 0);
  echo["anchor.generation"] = std::string(to_string(a.generation));
  if (a.generation == AnchorGeneration::kUserSupplied) {
    a.path = in.required("anchor.path");
    echo["anchor.path"] = a.path;
  } else {
    a.seed = in.number<std::uint64_t>("anchor.seed", std::nullopt);
    echo["anchor.seed"] = std::to_string(a.seed);
  }
  if (a.generation == AnchorGeneration::kUniformInBox) {
    const auto lo = in.get("anchor.lower");
    const auto hi = in.get("anchor.upper");
    if (lo && hi) {
      a.box = Box{in.vector("anchor.lower", *lo), in.vector("anchor.upper", *hi)};
    } else if (!lo && !hi && cfg.source == "synth") {
      a.box = synth_anchor_box(cfg.synth);
    } else {
      throw ConfigError("uniform-in-box anchors need anchor.lower and anchor.upper");
    }
    auto join = [](const Vector& v) {
      std::string out;
      for (Index i = 0; i < v.size(); ++i) {
        out += (i ? "," : "") + detail::format_number(v(i));
      }
      return out;
    };
    echo["anchor.lower"] = join(a.box->lower);
    echo["anchor.upper"] = join(a.box->upper);
  }
  echo["anchor.r"] = std::to_string(cfg.resolved_r());
  if (a.generation != AnchorGeneration::kUserSupplied) {
    for (const auto& p : cfg.parties) {
      if (p.mapper.dim > cfg.resolved_r()) {
        throw ConfigError("anchor.r = " + std::to_string(cfg.resolved_r()) +
                          " is below a party dimension " + std::to_string(p.mapper.dim));
      }
    }
  }

  cfg.ell = in.number<Index>("ell", 0);
  echo["ell"] = std::to_string(cfg.resolved_ell());

  cfg.learner.kind = parse_learner_kind(in.text("learner.kind", "least-squares"));
  cfg.learner.ridge = in.number<double>("learner.lambda", 1e-8);
  cfg.learner.k = in.number<int>("learner.k", 5);
  echo["learner.kind"] = std::string(to_string(cfg.learner.kind));
  echo["learner.lambda"] = detail::format_number(cfg.learner.ridge);
  echo["learner.k"] = std::to_string(cfg.learner.k);

  cfg.network.host = in.text("network.host", "127.0.0.1");
  cfg.network.port = in.number<std::uint16_t>("network.port", 0);
  cfg.network.session = in.number<std::uint64_t>("network.session", 1);
  cfg.network.timeout_ms = in.number<int>("network.timeout_ms", 30000);
  echo["network.session"] = std::to_string(cfg.network.session);

  cfg.output_path = in.text("output.path", "");
  const std::string format = in.text("output.format", "json-lines");
  cfg.format = parse_report_format(format);

  in.reject_unknown();
  return cfg;
}

inline KeyValues load_key_values(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const LoadError& e) {
    throw ConfigError(e.message());
  }
  return parse_key_values(text, path);
}

}  // namespace dcollab

#endif  // DCOLLAB_CONFIG_HPP_
