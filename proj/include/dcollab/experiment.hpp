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

#ifndef DCOLLAB_EXPERIMENT_HPP_
#define DCOLLAB_EXPERIMENT_HPP_

// Experiment runner: prepares party data and the anchor from a config,
// runs the requested regimes and collects a report.

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dcollab/config.hpp"
#include "dcollab/dataset.hpp"
#include "dcollab/network.hpp"
#include "dcollab/pipeline.hpp"

namespace dcollab {

struct ModeReport {
  std::string mode;
  double accuracy = 0.0;
  std::vector<double> party_accuracies;
  std::optional<double> alignment_residual;
  std::vector<double> singular_values;
  double timing_ms = 0.0;

  friend bool operator==(const ModeReport&, const ModeReport&) = default;
};

struct RunReport {
  KeyValues config;
  std::vector<int> n_train;
  std::vector<int> n_test;
  std::vector<ModeReport> modes;

  // Not serialized; kept for equivalence checks.
  std::map<std::string, Matrix> x_hat;
  std::map<std::string, std::vector<LabelMatrix>> predictions;

  const ModeReport& mode(std::string_view name) const {
    for (const auto& m : modes) {
      if (m.mode == name) return m;
    }
    throw ValidationError("report has no mode '" + std::string(name) + "'");
  }
};

struct PreparedData {
  std::vector<PartyData> parties;
  AnchorSet anchor;
};

inline Matrix load_feature_matrix(const std::string& path) {
  const auto records = csv::parse(read_file(path));
  if (records.size() < 2) throw LoadError(path + ": need a header and at least one row");
  const std::size_t width = records.front().fields.size();
  Matrix x(static_cast<Index>(width), static_cast<Index>(records.size() - 1));
  for (std::size_t s = 1; s < records.size(); ++s) {
    const auto& rec = records[s];
    if (rec.fields.size() != width) {
      throw LoadError(path + ": line " + std::to_string(rec.line) + " has " +
                      std::to_string(rec.fields.size()) + " fields, expected " +
                      std::to_string(width));
    }
    for (std::size_t c = 0; c < width; ++c) {
      const std::string& cell = rec.fields[c];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty() ||
          !std::isfinite(v)) {
        throw LoadError(path + ": line " + std::to_string(rec.line) + ", column '" +
                        records.front().fields[c] + "': '" + cell +
                        "' is not a finite number");
      }
      x(static_cast<Index>(c), static_cast<Index>(s - 1)) = v;
    }
  }
  return x;
}

// The shared anchor for an m-feature problem.
inline AnchorSet build_anchor(const ExperimentConfig& cfg, Index m) {
  if (cfg.anchor.generation == AnchorGeneration::kUserSupplied) {
    AnchorSet anchor = make_anchor(load_feature_matrix(cfg.anchor.path));
    if (anchor.features() != m) {
      throw LoadError("anchor has " + std::to_string(anchor.features()) +
                      " features, data has " + std::to_string(m));
    }
    return anchor;
  }
  return generate_anchor(m, cfg.resolved_r(), cfg.anchor.seed, cfg.anchor.generation,
                         cfg.anchor.box);
}

inline SessionConfig make_session_config(const ExperimentConfig& cfg,
                                         AnchorSet anchor) {
  return SessionConfig{cfg.network.session, cfg.parties.size(), std::move(anchor),
                       cfg.resolved_ell(), cfg.learner};
}

inline PreparedData prepare_data(const ExperimentConfig& cfg) {
  return in_phase(kPhasePreparation, [&] {
    PreparedData out;
    if (cfg.source == "synth") {
      out.parties = synth_imbalanced(cfg.synth);
    } else {
      std::vector<LabeledData> train, test;
      std::vector<std::vector<std::string>> tables;
      for (const auto& p : cfg.parties) {
        train.push_back(load_dataset(p.train_path, cfg.label_column));
        test.push_back(load_dataset(p.test_path, cfg.label_column));
        tables.push_back(train.back().labels);
        tables.push_back(test.back().labels);
      }
      const auto classes = merge_classes(tables);
      for (std::size_t i = 0; i < train.size(); ++i) {
        if (train[i].x.rows() != train.front().x.rows() ||
            test[i].x.rows() != train.front().x.rows()) {
          throw LoadError("party " + std::to_string(i) +
                          " has a different feature count than party 0");
        }
        out.parties.push_back(PartyData{
            train[i].x, LabelMatrix::from_names(train[i].labels, classes),
            test[i].x, LabelMatrix::from_names(test[i].labels, classes)});
      }
    }
    out.anchor = build_anchor(cfg, out.parties.front().x_train.rows());
    return out;
  });
}

// Data of a single party, as that party's own process would load it.
inline PartyData load_party(const ExperimentConfig& cfg, std::size_t index) {
  if (index >= cfg.parties.size()) {
    throw ConfigError("party index " + std::to_string(index) + " outside [0, " +
                      std::to_string(cfg.parties.size()) + ")");
  }
  return in_phase(kPhasePreparation, [&] {
    if (cfg.source == "synth") return synth_imbalanced(cfg.synth)[index];
    const auto& p = cfg.parties[index];
    LabeledData train = load_dataset(p.train_path, cfg.label_column);
    LabeledData test = load_dataset(p.test_path, cfg.label_column);
    const auto classes = merge_classes({train.labels, test.labels});
    return PartyData{train.x, LabelMatrix::from_names(train.labels, classes), test.x,
                     LabelMatrix::from_names(test.labels, classes)};
  });
}

inline std::vector<MapperSpec> mapper_specs(const ExperimentConfig& cfg) {
  std::vector<MapperSpec> specs;
  for (const auto& p : cfg.parties) specs.push_back(p.mapper);
  return specs;
}

struct NetworkedRun {
  SessionState state;
  std::vector<LabelMatrix> predictions;
};

// Forks one child process per party; the calling process acts as the
// coordinator. Children hold their party's data and exit after the session.
inline NetworkedRun run_networked(const PreparedData& data,
                                  const std::vector<MapperSpec>& specs,
                                  const SessionConfig& session,
                                  const NetworkConfig& net) {
  const auto timeout = std::chrono::milliseconds(net.timeout_ms);
  TcpListener listener(net.host, net.port);
  const std::uint16_t port = listener.port();
  std::fflush(nullptr);
  std::vector<pid_t> children;
  for (std::size_t i = 0; i < data.parties.size(); ++i) {
    const pid_t pid = ::fork();
    if (pid < 0) throw ProtocolError("fork failed");
    if (pid == 0) {
      listener.close();
      int code = 0;
      try {
        TcpChannel ch = connect_tcp(net.host, port, timeout);
        party_run(specs[i], data.parties[i], ch, static_cast<std::uint16_t>(i));
      } catch (const Error& e) {
        code = static_cast<int>(e.exit_code());
      } catch (...) {
        code = static_cast<int>(ExitCode::kProtocol);
      }
      ::_exit(code);
    }
    children.push_back(pid);
  }

  NetworkedRun run;
  std::string failure;
  try {
    run.state = serve_session(listener, session, timeout);
    failure = run.state.failure;
  } catch (const Error& e) {
    failure = e.what();
  }
  for (std::size_t i = 0; i < children.size(); ++i) {
    int status = 0;
    ::waitpid(children[i], &status, 0);
    if (failure.empty() && (!WIFEXITED(status) || WEXITSTATUS(status) != 0)) {
      failure = "party process " + std::to_string(i) + " failed";
    }
  }
  if (!failure.empty()) throw ProtocolError(failure);
  for (const auto& slot : run.state.slots) run.predictions.push_back(*slot.predictions);
  return run;
}

inline double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since)
      .count();
}

inline std::vector<double> to_std(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline RunReport run_experiment(const ExperimentConfig& cfg) {
  const PreparedData data = prepare_data(cfg);
  const auto specs = mapper_specs(cfg);
  const Index ell = cfg.resolved_ell();

  RunReport report;
  report.config = cfg.echo;
  for (const auto& p : data.parties) {
    report.n_train.push_back(static_cast<int>(p.x_train.cols()));
    report.n_test.push_back(static_cast<int>(p.y_test.cols()));
  }

  for (Mode mode : cfg.modes) {
    const auto start = std::chrono::steady_clock::now();
    ModeReport m;
    m.mode = std::string(to_string(mode));
    switch (mode) {
      case Mode::kCentralized: {
        const CentralizedRun run = in_phase(kPhaseAnalysis, [&] {
          return run_centralized(data.parties, ell, cfg.learner);
        });
        m.accuracy = run.accuracy;
        report.predictions[m.mode] = {run.predictions};
        break;
      }
      case Mode::kIndividual: {
        const IndividualRun run = in_phase(kPhaseAnalysis, [&] {
          return run_individual(data.parties, specs, cfg.learner);
        });
        m.party_accuracies = run.accuracies;
        double sum = 0.0;
        for (double a : run.accuracies) sum += a;
        m.accuracy = sum / static_cast<double>(run.accuracies.size());
        report.predictions[m.mode] = run.predictions;
        break;
      }
      case Mode::kCollaboration: {
        const CollaborationRun run =
            run_collaboration(data.parties, specs, data.anchor, ell, cfg.learner);
        for (std::size_t i = 0; i < data.parties.size(); ++i) {
          m.party_accuracies.push_back(
              accuracy(run.predictions[i], data.parties[i].test_labels));
        }
        m.accuracy = pooled_accuracy(run.predictions, data.parties);
        m.alignment_residual = run.collaboration.transform.alignment_residual;
        m.singular_values = to_std(run.collaboration.transform.sigma);
        report.x_hat[m.mode] = run.collaboration.x_hat;
        report.predictions[m.mode] = run.predictions;
        break;
      }
      case Mode::kCollaborationNetworked: {
        const SessionConfig session = make_session_config(cfg, data.anchor);
        NetworkedRun run;
        try {
          run = run_networked(data, specs, session, cfg.network);
        } catch (Error& e) {
          if (e.phase().empty()) e.set_phase(kPhaseCollaboration);
          throw;
        }
        const auto& transform = run.state.collaboration->transform;
        for (std::size_t i = 0; i < data.parties.size(); ++i) {
          m.party_accuracies.push_back(
              accuracy(run.predictions[i], data.parties[i].test_labels));
        }
        m.accuracy = pooled_accuracy(run.predictions, data.parties);
        m.alignment_residual = transform.alignment_residual;
        m.singular_values = to_std(transform.sigma);
        report.x_hat[m.mode] = run.state.collaboration->x_hat;
        report.predictions[m.mode] = run.predictions;
        break;
      }
    }
    m.timing_ms = elapsed_ms(start);
    report.modes.push_back(std::move(m));
  }
  return report;
}

// One JSON object per mode, fields in a fixed order.
inline std::string format_json_lines(const RunReport& report) {
  std::string out;
  for (const auto& m : report.modes) {
    nlohmann::ordered_json j;
    j["mode"] = m.mode;
    j["accuracy"] = m.accuracy;
    j["party_accuracies"] = m.party_accuracies;
    j["alignment_residual"] =
        m.alignment_residual ? nlohmann::ordered_json(*m.alignment_residual)
                           : nlohmann::ordered_json(nullptr);
    j["singular_values"] = m.singular_values;
    j["n_train"] = report.n_train;
    j["n_test"] = report.n_test;
    j["timing_ms"] = m.timing_ms;
    j["config"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : report.config) j["config"][k] = v;
    out += j.dump() + "\n";
  }
  return out;
}

inline RunReport parse_json_lines(std::string_view text) {
  RunReport report;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ModeReport m;
      m.mode = j.at("mode").get<std::string>();
      m.accuracy = j.at("accuracy").get<double>();
      m.party_accuracies = j.at("party_accuracies").get<std::vector<double>>();
      if (!j.at("alignment_residual").is_null()) {
        m.alignment_residual = j.at("alignment_residual").get<double>();
      }
      m.singular_values = j.at("singular_values").get<std::vector<double>>();
      m.timing_ms = j.at("timing_ms").get<double>();
      report.n_train = j.at("n_train").get<std::vector<int>>();
      report.n_test = j.at("n_test").get<std::vector<int>>();
      report.config = j.at("config").get<KeyValues>();
      report.modes.push_back(std::move(m));
    } catch (const nlohmann::json::exception& e) {
      throw LoadError("report line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return report;
}

inline std::string format_table(const RunReport& report) {
  std::ostringstream out;
  char buf[256];
  out << "config\n";
  for (const auto& [k, v] : report.config) out << "  " << k << " = " << v << "\n";
  out << "parties\n";
  for (std::size_t i = 0; i < report.n_train.size(); ++i) {
    out << "  party " << i << ": n_train=" << report.n_train[i]
        << " n_test=" << report.n_test[i] << "\n";
  }
  std::snprintf(buf, sizeof buf, "%-24s %10s %20s %12s\n", "mode", "accuracy",
                "alignment", "time_ms");
  out << buf;
  for (const auto& m : report.modes) {
    const std::string residual =
        m.alignment_residual ? csv::format_double(*m.alignment_residual) : "-";
    std::snprintf(buf, sizeof buf, "%-24s %10.4f %20s %12.3f\n", m.mode.c_str(),
                  m.accuracy, residual.c_str(), m.timing_ms);
    out << buf;
    if (!m.party_accuracies.empty()) {
      out << "  per party:";
      for (double a : m.party_accuracies) {
        std::snprintf(buf, sizeof buf, " %.4f", a);
        out << buf;
      }
      out << "\n";
    }
    if (!m.singular_values.empty()) {
      out << "  singular values:";
      for (double s : m.singular_values) out << " " << csv::format_double(s);
      out << "\n";
    }
  }
  return out.str();
}

inline std::string format_report(const RunReport& report, ReportFormat format) {
  return format == ReportFormat::kJsonLines ? format_json_lines(report)
                                            : format_table(report);
}

inline void emit_report(const RunReport& report, ReportFormat format,
                        const std::string& path) {
  const std::string text = format_report(report, format);
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write report to '" + path + "'");
  out << text;
  if (!out) throw IoError("writing report to '" + path + "' failed");
}

}  // namespace dcollab

#endif  // DCOLLAB_EXPERIMENT_HPP_
