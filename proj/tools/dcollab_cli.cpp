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

// Command line front end.
//
//   dcollab run --config exp.conf [--set key=value ...]
//   dcollab coordinator --config exp.conf [--port N]
//   dcollab party --config exp.conf --index I [--port N]
//   dcollab synth --config exp.conf --out-dir DIR
//   dcollab report --input report.jsonl [--format human-table]

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dcollab/dcollab.hpp"

namespace {

using namespace dcollab;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
};

ExperimentConfig load_config(const CommonOptions& opts) {
  KeyValues kv;
  if (!opts.config_path.empty()) kv = load_key_values(opts.config_path);
  for (const auto& o : opts.overrides) assign(kv, o, "--set");
  return make_config(kv);
}

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("-c,--config", opts.config_path, "experiment config file");
  cmd->add_option("-s,--set", opts.overrides, "override a setting, key=value")
      ->allow_extra_args(false);
}

int run_command(const CommonOptions& opts, const std::string& format,
                const std::string& output) {
  ExperimentConfig cfg = load_config(opts);
  if (!format.empty()) cfg.format = parse_report_format(format);
  if (!output.empty()) cfg.output_path = output;
  const RunReport report = run_experiment(cfg);
  emit_report(report, cfg.format, cfg.output_path);
  return 0;
}

int coordinator_command(const CommonOptions& opts, int port,
                        const std::string& save_model) {
  ExperimentConfig cfg = load_config(opts);
  if (port >= 0) cfg.network.port = static_cast<std::uint16_t>(port);
  Index m = cfg.known_features();
  if (m == 0 && cfg.anchor.generation != AnchorGeneration::kUserSupplied) {
    throw ConfigError("the coordinator needs data.features to build anchors");
  }
  AnchorSet anchor = in_phase(kPhasePreparation, [&] {
    if (m == 0) m = load_feature_matrix(cfg.anchor.path).rows();
    return build_anchor(cfg, m);
  });
  TcpListener listener(cfg.network.host, cfg.network.port);
  std::cerr << "coordinator listening on " << cfg.network.host << ":"
            << listener.port() << " for " << cfg.parties.size() << " parties\n";
  const SessionState state =
      serve_session(listener, make_session_config(cfg, std::move(anchor)),
                    std::chrono::milliseconds(cfg.network.timeout_ms));
  if (!state.failure.empty()) {
    ProtocolError e(state.failure);
    e.set_phase(kPhaseCollaboration);
    throw e;
  }
  const auto& t = state.collaboration->transform;
  std::cout << "session " << cfg.network.session << " done\n"
            << "alignment_residual " << csv::format_double(t.alignment_residual) << "\n"
            << "singular_values";
  for (Index i = 0; i < t.sigma.size(); ++i) std::cout << " " << csv::format_double(t.sigma(i));
  std::cout << "\n";
  for (std::size_t i = 0; i < state.slots.size(); ++i) {
    std::cout << "party " << i << ": " << state.slots[i].train_tilde->cols()
              << " training samples, " << state.slots[i].predictions->size()
              << " predictions\n";
  }
  if (!save_model.empty()) dcollab::save_model(save_model, *state.model);
  return 0;
}

int party_command(const CommonOptions& opts, int index, int port,
                  const std::string& host, const std::string& save_mapper,
                  const std::string& predictions_out) {
  ExperimentConfig cfg = load_config(opts);
  if (port >= 0) cfg.network.port = static_cast<std::uint16_t>(port);
  if (!host.empty()) cfg.network.host = host;
  if (cfg.network.port == 0) throw ConfigError("a party needs network.port or --port");
  const auto i = static_cast<std::size_t>(index);
  const PartyData data = load_party(cfg, i);
  const MapperSpec& spec = cfg.parties.at(i).mapper;
  TcpChannel ch = connect_tcp(cfg.network.host, cfg.network.port,
                              std::chrono::milliseconds(cfg.network.timeout_ms));
  const PartyResult result = party_run(spec, data, ch, static_cast<std::uint16_t>(i));
  std::cout << "party " << result.party_id << " accuracy "
            << csv::format_double(accuracy(result.predictions, data.test_labels)) << "\n";
  if (!save_mapper.empty()) dcollab::save_mapper(save_mapper, fit_mapper(spec, data.x_train));
  if (!predictions_out.empty()) {
    std::ofstream out(predictions_out);
    if (!out) throw IoError("cannot write '" + predictions_out + "'");
    out << "predicted," << csv::quote(cfg.label_column) << "\n";
    for (std::size_t k = 0; k < result.predictions.size(); ++k) {
      out << csv::quote(result.predictions.name(k)) << ","
          << csv::quote(data.test_labels.name(k)) << "\n";
    }
  }
  return 0;
}

int synth_command(const CommonOptions& opts, const std::string& out_dir) {
  const ExperimentConfig cfg = load_config(opts);
  if (cfg.source != "synth") throw ConfigError("synth needs data.source = synth");
  std::filesystem::create_directories(out_dir);
  const auto parties = synth_imbalanced(cfg.synth);
  std::ofstream conf(out_dir + "/experiment.conf");
  if (!conf) throw IoError("cannot write '" + out_dir + "/experiment.conf'");
  conf << "# written by dcollab synth\n"
       << "data.source = csv\n"
       << "data.label_column = " << cfg.label_column << "\n"
       << "data.features = " << cfg.synth.features << "\n"
       << "parties = " << parties.size() << "\n";
  for (std::size_t i = 0; i < parties.size(); ++i) {
    const std::string stem = out_dir + "/party" + std::to_string(i);
    save_dataset(stem + "_train.csv",
                 LabeledData{parties[i].x_train, parties[i].labels.names(), {}},
                 cfg.label_column);
    save_dataset(stem + "_test.csv",
                 LabeledData{parties[i].y_test, parties[i].test_labels.names(), {}},
                 cfg.label_column);
    const std::string key = "party." + std::to_string(i) + ".";
    conf << key << "train = " << stem << "_train.csv\n"
         << key << "test = " << stem << "_test.csv\n";
  }
  for (const auto& [k, v] : cfg.echo) {
    if (k.rfind("synth.", 0) == 0 || k == "data.source" || k == "data.label_column") continue;
    conf << k << " = " << v << "\n";
  }
  std::cout << "wrote " << parties.size() << " parties to " << out_dir << "\n";
  return 0;
}

int report_command(const std::string& input, const std::string& format,
                   const std::string& output) {
  const RunReport report = parse_json_lines(read_file(input));
  emit_report(report, parse_report_format(format), output);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data collaboration analysis over distributed datasets"};
  app.require_subcommand(1);

  CommonOptions run_opts, coord_opts, party_opts, synth_opts;
  std::string format, output, save_model, save_mapper, predictions_out, host;
  std::string out_dir, input, report_format = "human-table";
  int port = -1;
  int index = 0;

  auto* run = app.add_subcommand("run", "run the configured analysis regimes");
  add_common(run, run_opts);
  run->add_option("-f,--format", format, "human-table or json-lines");
  run->add_option("-o,--output", output, "report path, - for stdout");

  auto* coord = app.add_subcommand("coordinator", "serve one collaboration session");
  add_common(coord, coord_opts);
  coord->add_option("-p,--port", port, "listen port");
  coord->add_option("--save-model", save_model, "write the trained model container");

  auto* party = app.add_subcommand("party", "join a session as one party");
  add_common(party, party_opts);
  party->add_option("-i,--index", index, "party index in the config")->required();
  party->add_option("-p,--port", port, "coordinator port");
  party->add_option("--host", host, "coordinator host");
  party->add_option("--save-mapper", save_mapper, "write the private mapper container");
  party->add_option("--predictions", predictions_out, "write test predictions as CSV");

  auto* synth = app.add_subcommand("synth", "write synthetic party datasets as CSV");
  add_common(synth, synth_opts);
  synth->add_option("-d,--out-dir", out_dir, "output directory")->required();

  auto* report = app.add_subcommand("report", "render a json-lines report");
  report->add_option("-i,--input", input, "json-lines report")->required();
  report->add_option("-f,--format", report_format, "human-table or json-lines");
  report->add_option("-o,--output", output, "output path, - for stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kConfig);
  }

  try {
    if (*run) return run_command(run_opts, format, output);
    if (*coord) return coordinator_command(coord_opts, port, save_model);
    if (*party) {
      return party_command(party_opts, index, port, host, save_mapper, predictions_out);
    }
    if (*synth) return synth_command(synth_opts, out_dir);
    if (*report) return report_command(input, report_format, output);
  } catch (const Error& e) {
    std::cerr << "dcollab: " << e.category() << ": " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "dcollab: io error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kIo);
  }
  return 0;
}
