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

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "dcollab/dcollab.hpp"

namespace dcollab {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "dcollab_test_experiment" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

KeyValues base_settings() {
  return {{"synth.seed", "3"},           {"synth.features", "8"},
          {"synth.parties", "3"},        {"synth.train_per_party", "30"},
          {"synth.test_per_party", "12"}, {"party.default.mapper", "random-projection"},
          {"party.default.dim", "4"},    {"party.default.seed", "40"},
          {"anchor.seed", "9"},          {"anchor.r", "16"}};
}

ExperimentConfig config_with(KeyValues kv, const KeyValues& extra = {}) {
  for (const auto& [k, v] : extra) kv[k] = v;
  return make_config(kv);
}

std::string config_error(const KeyValues& kv) {
  try {
    make_config(kv);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

RunReport without_timing(RunReport r) {
  for (auto& m : r.modes) m.timing_ms = 0.0;
  return r;
}

TEST(KeyValues, ParsesCommentsAndWhitespace) {
  const KeyValues kv = parse_key_values("# header\n a = 1 \n\nb=two words # trailing\n", "x");
  EXPECT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv.at("a"), "1");
  EXPECT_EQ(kv.at("b"), "two words");
  EXPECT_THROW(parse_key_values("novalue\n", "x"), ConfigError);
  EXPECT_THROW(parse_key_values(" = 3\n", "x"), ConfigError);
  KeyValues over = kv;
  assign(over, "a=5", "--set");
  EXPECT_EQ(over.at("a"), "5");
}

TEST(Config, DefaultsAndDerivedValues) {
  const ExperimentConfig cfg = config_with(base_settings(), {{"anchor.r", "0"}, {"party.2.dim", "3"}});
  EXPECT_EQ(cfg.modes, (std::vector<Mode>{Mode::kCentralized, Mode::kIndividual, Mode::kCollaboration}));
  ASSERT_EQ(cfg.parties.size(), 3u);
  EXPECT_EQ(cfg.parties[0].mapper.seed, 40u);
  EXPECT_EQ(cfg.parties[2].mapper.seed, 42u);
  EXPECT_EQ(cfg.parties[2].mapper.dim, 3);
  EXPECT_EQ(cfg.resolved_ell(), 3);
  EXPECT_EQ(cfg.resolved_r(), 8);
  EXPECT_EQ(cfg.learner.ridge, 1e-8);
  EXPECT_EQ(cfg.echo.at("ell"), "3");
  EXPECT_EQ(cfg.echo.at("anchor.r"), "8");
  EXPECT_EQ(cfg.echo.at("learner.lambda"), "1e-08");
  EXPECT_EQ(cfg.echo.count("network.port"), 0u);
}

TEST(Config, SeedsAreMandatory) {
  KeyValues kv = base_settings();
  kv.erase("synth.seed");
  EXPECT_NE(config_error(kv).find("synth.seed"), std::string::npos);
  kv = base_settings();
  kv.erase("anchor.seed");
  EXPECT_NE(config_error(kv).find("anchor.seed"), std::string::npos);
  kv = base_settings();
  kv.erase("party.default.seed");
  EXPECT_NE(config_error(kv).find("party.0.seed"), std::string::npos);
}

TEST(Config, Rejections) {
  auto kv = base_settings();
  kv["synth.sede"] = "1";
  EXPECT_NE(config_error(kv).find("unknown setting 'synth.sede'"), std::string::npos);
  kv = base_settings();
  kv["anchor.r"] = "3";
  EXPECT_NE(config_error(kv).find("below a party dimension"), std::string::npos);
  kv = base_settings();
  kv["party.1.mapper"] = "linear-explicit";
  EXPECT_NE(config_error(kv).find("API-only"), std::string::npos);
  kv = base_settings();
  kv["mode"] = "centralised";
  EXPECT_NE(config_error(kv).find("unknown mode"), std::string::npos);
  kv = base_settings();
  kv["ell"] = "four";
  EXPECT_NE(config_error(kv).find("not a valid number"), std::string::npos);
  kv = base_settings();
  kv["data.source"] = "csv";
  EXPECT_NE(config_error(kv).find("'parties'"), std::string::npos);
  kv["parties"] = "1";
  EXPECT_NE(config_error(kv).find("party.0.train"), std::string::npos);
  kv = base_settings();
  kv["anchor.generation"] = "uniform-in-box";
  kv["anchor.lower"] = "0,0";
  EXPECT_NE(config_error(kv).find("anchor.upper"), std::string::npos);
  kv = base_settings();
  kv["output.format"] = "xml";
  EXPECT_NE(config_error(kv).find("report format"), std::string::npos);
}

TEST(Config, UniformBoxFromSyntheticParameters) {
  const ExperimentConfig cfg = config_with(base_settings(), {{"anchor.generation", "uniform-in-box"}});
  ASSERT_TRUE(cfg.anchor.box);
  EXPECT_EQ(cfg.anchor.box->lower, synth_anchor_box(cfg.synth).lower);
  EXPECT_FALSE(cfg.echo.at("anchor.upper").empty());
}

TEST(Config, LoadFromMissingFile) {
  EXPECT_THROW(load_key_values("/nonexistent/experiment.conf"), ConfigError);
}

TEST(RunExperiment, ReportsEveryModeInOrder) {
  const RunReport r = run_experiment(config_with(base_settings()));
  ASSERT_EQ(r.modes.size(), 3u);
  EXPECT_EQ(r.modes[0].mode, "centralized");
  EXPECT_EQ(r.modes[1].mode, "individual");
  EXPECT_EQ(r.modes[2].mode, "collaboration");
  EXPECT_EQ(r.n_train, (std::vector<int>{30, 30, 30}));
  EXPECT_EQ(r.n_test, (std::vector<int>{12, 12, 12}));
  EXPECT_EQ(r.modes[1].party_accuracies.size(), 3u);
  double sum = 0;
  for (double a : r.modes[1].party_accuracies) sum += a;
  EXPECT_DOUBLE_EQ(r.modes[1].accuracy, sum / 3);
  ASSERT_TRUE(r.modes[2].alignment_residual);
  EXPECT_GE(*r.modes[2].alignment_residual, 0.0);
  EXPECT_EQ(r.modes[2].singular_values.size(), 12u);
  EXPECT_FALSE(r.modes[0].alignment_residual);
  for (const auto& m : r.modes) {
    EXPECT_GE(m.accuracy, 0.0);
    EXPECT_LE(m.accuracy, 1.0);
  }
}

TEST(RunExperiment, TwoRunsAreByteIdenticalApartFromTiming) {
  const ExperimentConfig cfg = config_with(base_settings(), {{"learner.kind", "knn"}, {"learner.k", "3"}});
  const RunReport a = without_timing(run_experiment(cfg));
  const RunReport b = without_timing(run_experiment(cfg));
  EXPECT_EQ(format_json_lines(a), format_json_lines(b));
  EXPECT_EQ(format_table(a), format_table(b));
  EXPECT_EQ(a.x_hat, b.x_hat);
}

TEST(RunExperiment, SinglePartyCollaborationEqualsIndividual) {
  const ExperimentConfig cfg = config_with(
      base_settings(), {{"synth.parties", "1"}, {"party.default.mapper", "pca"},
                        {"learner.lambda", "0"}, {"mode", "individual,collaboration"}});
  const RunReport r = run_experiment(cfg);
  EXPECT_EQ(r.predictions.at("individual"), r.predictions.at("collaboration"));
  EXPECT_EQ(r.modes[0].accuracy, r.modes[1].accuracy);
}

TEST(RunExperiment, NetworkedMatchesInProcess) {
  const ExperimentConfig cfg =
      config_with(base_settings(), {{"mode", "collaboration,collaboration-networked"},
                                    {"network.timeout_ms", "10000"}});
  const RunReport r = run_experiment(cfg);
  ASSERT_EQ(r.modes.size(), 2u);
  EXPECT_EQ(r.modes[0].accuracy, r.modes[1].accuracy);
  EXPECT_EQ(r.modes[0].party_accuracies, r.modes[1].party_accuracies);
  EXPECT_EQ(r.modes[0].alignment_residual, r.modes[1].alignment_residual);
  EXPECT_EQ(r.modes[0].singular_values, r.modes[1].singular_values);
  const Matrix& a = r.x_hat.at("collaboration");
  const Matrix& b = r.x_hat.at("collaboration-networked");
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()), 0);
  EXPECT_EQ(r.predictions.at("collaboration"), r.predictions.at("collaboration-networked"));
}

TEST(RunExperiment, CsvSourceReproducesSyntheticRun) {
  const ExperimentConfig synth = config_with(base_settings());
  const fs::path dir = scratch_dir("csv");
  const auto parties = synth_imbalanced(synth.synth);
  KeyValues kv = base_settings();
  for (auto key : {"synth.seed", "synth.features", "synth.parties", "synth.train_per_party",
                   "synth.test_per_party"}) {
    kv.erase(key);
  }
  kv["data.source"] = "csv";
  kv["parties"] = "3";
  for (std::size_t i = 0; i < parties.size(); ++i) {
    const auto save = [&](const Matrix& x, const LabelMatrix& l, const std::string& name) {
      const fs::path path = dir / name;
      save_dataset(path.string(), LabeledData{x, l.names(), {}}, "label");
      return path.string();
    };
    kv["party." + std::to_string(i) + ".train"] =
        save(parties[i].x_train, parties[i].labels, "p" + std::to_string(i) + "_train.csv");
    kv["party." + std::to_string(i) + ".test"] =
        save(parties[i].y_test, parties[i].test_labels, "p" + std::to_string(i) + "_test.csv");
  }
  const RunReport a = run_experiment(synth);
  const RunReport b = run_experiment(make_config(kv));
  ASSERT_EQ(a.modes.size(), b.modes.size());
  for (std::size_t k = 0; k < a.modes.size(); ++k) {
    EXPECT_EQ(a.modes[k].accuracy, b.modes[k].accuracy) << a.modes[k].mode;
    EXPECT_EQ(a.modes[k].party_accuracies, b.modes[k].party_accuracies);
  }
  EXPECT_EQ(a.x_hat, b.x_hat);
}

TEST(RunExperiment, ErrorsNameThePhase) {
  auto expect_phase = [](const ExperimentConfig& cfg, const std::string& phase, ExitCode code) {
    try {
      run_experiment(cfg);
      ADD_FAILURE() << "expected failure in " << phase;
    } catch (const Error& e) {
      EXPECT_EQ(e.phase(), phase) << e.what();
      EXPECT_EQ(std::string(e.what()).rfind(phase + ": ", 0), 0u) << e.what();
      EXPECT_EQ(e.exit_code(), code) << e.what();
    }
  };
  expect_phase(config_with(base_settings(), {{"party.1.mapper", "pca"}, {"party.1.dim", "9"},
                                             {"anchor.r", "20"}, {"mode", "collaboration"}}),
               kPhaseIndividual, ExitCode::kNumeric);
  expect_phase(config_with(base_settings(), {{"ell", "13"}, {"mode", "collaboration"}}),
               kPhaseCollaboration, ExitCode::kNumeric);
  expect_phase(config_with(base_settings(), {{"synth.skew", "2"}}), kPhasePreparation,
               ExitCode::kConfig);
  expect_phase(config_with(base_settings(), {{"ell", "13"}, {"mode", "collaboration-networked"},
                                             {"network.timeout_ms", "5000"}}),
               kPhaseCollaboration, ExitCode::kProtocol);
}

TEST(Report, JsonLinesReparseEqualsMemory) {
  const RunReport r = run_experiment(config_with(base_settings()));
  const RunReport back = parse_json_lines(format_json_lines(r));
  EXPECT_EQ(back.modes, r.modes);
  EXPECT_EQ(back.config, r.config);
  EXPECT_EQ(back.n_train, r.n_train);
  EXPECT_EQ(back.n_test, r.n_test);
  EXPECT_THROW(parse_json_lines("{\"mode\": 1}\n"), LoadError);
  EXPECT_THROW(parse_json_lines("not json\n"), LoadError);
}

TEST(Report, StableFieldOrder) {
  const RunReport r = run_experiment(config_with(base_settings(), {{"mode", "centralized"}}));
  const std::string line = format_json_lines(r);
  const char* fields[] = {"\"mode\"", "\"accuracy\"", "\"party_accuracies\"",
                          "\"alignment_residual\"", "\"singular_values\"", "\"n_train\"",
                          "\"n_test\"", "\"timing_ms\"", "\"config\""};
  std::size_t at = 0;
  for (const char* f : fields) {
    const std::size_t next = line.find(f, at);
    ASSERT_NE(next, std::string::npos) << f;
    at = next;
  }
  EXPECT_NE(line.find("\"alignment_residual\":null"), std::string::npos);
}

TEST(Report, ConfigSectionAlwaysPresent) {
  RunReport empty;
  empty.modes.push_back(ModeReport{"centralized", 1.0, {}, std::nullopt, {}, 0.0});
  EXPECT_NE(format_json_lines(empty).find("\"config\":{}"), std::string::npos);
  EXPECT_EQ(format_table(empty).rfind("config\n", 0), 0u);
  const RunReport minimal = run_experiment(config_with(base_settings(), {{"mode", "individual"}}));
  EXPECT_FALSE(minimal.config.empty());
  EXPECT_EQ(minimal.config.at("synth.seed"), "3");
}

TEST(Report, EmitToFileAndUnwritablePath) {
  const RunReport r = run_experiment(config_with(base_settings(), {{"mode", "centralized"}}));
  const fs::path path = scratch_dir("emit") / "report.jsonl";
  emit_report(r, ReportFormat::kJsonLines, path.string());
  std::ifstream in(path);
  std::stringstream text;
  text << in.rdbuf();
  EXPECT_EQ(text.str(), format_json_lines(r));
  try {
    emit_report(r, ReportFormat::kHumanTable, "/nonexistent/dir/report.txt");
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_EQ(e.exit_code(), ExitCode::kIo);
  }
}

TEST(Container, MapperRoundTripIsBitwise) {
  const Matrix x = generate_anchor(5, 20, 1, AnchorGeneration::kStandardNormal).x_anc;
  const fs::path dir = scratch_dir("container");
  for (const Mapper& f : {fit_pca(x, 3, 7), fit_random_projection(5, 2, 8)}) {
    const fs::path path = dir / "mapper.json";
    save_mapper(path.string(), f);
    const Mapper back = load_mapper(path.string());
    EXPECT_EQ(back, f);
    EXPECT_EQ(back.apply(x), f.apply(x));
  }
}

TEST(Container, ModelRoundTripIsBitwise) {
  const Matrix x = generate_anchor(4, 12, 2, AnchorGeneration::kStandardNormal).x_anc;
  std::vector<std::string> names;
  for (Index j = 0; j < 12; ++j) names.push_back(x(0, j) > 0 ? "up" : "down");
  const LabelMatrix l = LabelMatrix::from_names(names);
  for (auto kind : {LearnerKind::kLeastSquares, LearnerKind::kKnn}) {
    const TrainedModel m = train(x, l, {kind, 0.25, 3});
    const TrainedModel back = deserialize_model(serialize(m));
    EXPECT_EQ(back.w, m.w);
    EXPECT_EQ(back.train_x, m.train_x);
    EXPECT_EQ(back.classes, m.classes);
    EXPECT_EQ(predict(back, x), predict(m, x));
  }
}

TEST(Container, RejectsForeignDocuments) {
  const Mapper f = fit_random_projection(3, 2, 1);
  EXPECT_THROW(deserialize_model(serialize(f)), LoadError);
  EXPECT_THROW(deserialize_mapper("{\"format\":\"other\"}"), LoadError);
  EXPECT_THROW(deserialize_mapper("[1,2"), LoadError);
  std::string text = serialize(f);
  text.replace(text.find("\"version\": 1"), 12, "\"version\": 2");
  EXPECT_THROW(deserialize_mapper(text), LoadError);
  EXPECT_THROW(load_mapper("/nonexistent/mapper.json"), LoadError);
  EXPECT_THROW(save_mapper("/nonexistent/dir/mapper.json", f), IoError);
}

}  // namespace
}  // namespace dcollab
