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

#ifndef DCOLLAB_PIPELINE_HPP_
#define DCOLLAB_PIPELINE_HPP_

// In-process versions of the three analysis regimes: centralized (pool the
// raw data), individual (each party alone) and collaboration (share only
// intermediate representations and align them through the anchor).

#include <string>
#include <vector>

#include "dcollab/collaboration.hpp"
#include "dcollab/error.hpp"
#include "dcollab/learner.hpp"
#include "dcollab/mapper.hpp"

namespace dcollab {

// Runs `body`, labelling any library error with `phase` on its way out.
template <typename Body>
auto in_phase(const char* phase, Body&& body) -> decltype(body()) {
  try {
    return body();
  } catch (Error& e) {
    if (e.phase().empty()) e.set_phase(phase);
    throw;
  }
}

inline constexpr const char* kPhasePreparation = "phase 0 (preparation)";
inline constexpr const char* kPhaseIndividual = "phase 1 (individual preparation)";
inline constexpr const char* kPhaseCollaboration = "phase 2 (data collaboration)";
inline constexpr const char* kPhaseAnalysis = "phase 3 (analysis)";

// One institution's private data. test_labels are used only for scoring.
struct PartyData {
  Matrix x_train;
  LabelMatrix labels;
  Matrix y_test;
  LabelMatrix test_labels;
};

struct CollaborationRun {
  std::vector<Mapper> mappers;  // stays with each party in a real deployment
  Collaboration collaboration;
  TrainedModel model;
  std::vector<LabelMatrix> predictions;  // per party, on its test set
};

inline CollaborationRun run_collaboration(const std::vector<PartyData>& parties,
                                          const std::vector<MapperSpec>& specs,
                                          const AnchorSet& anchor, Index ell,
                                          const LearnerParams& learner) {
  if (parties.empty() || parties.size() != specs.size()) {
    throw ConfigError("collaboration needs one mapper spec per party");
  }
  CollaborationRun run;
  std::vector<Matrix> anchors_tilde;
  std::vector<Matrix> trains_tilde;
  std::vector<LabelMatrix> labels;
  in_phase(kPhaseIndividual, [&] {
    for (std::size_t i = 0; i < parties.size(); ++i) {
      run.mappers.push_back(fit_mapper(specs[i], parties[i].x_train));
      trains_tilde.push_back(run.mappers[i].apply(parties[i].x_train));
      anchors_tilde.push_back(run.mappers[i].apply(anchor.x_anc));
      labels.push_back(parties[i].labels);
    }
  });
  in_phase(kPhaseCollaboration, [&] {
    run.collaboration = build_collaboration(anchors_tilde, trains_tilde, ell);
  });
  in_phase(kPhaseAnalysis, [&] {
    run.model = train(run.collaboration.x_hat, concat_labels(labels), learner);
    for (std::size_t i = 0; i < parties.size(); ++i) {
      const Matrix y_hat = transform_test(run.collaboration.transform, i,
                                          run.mappers[i].apply(parties[i].y_test));
      run.predictions.push_back(predict(run.model, y_hat));
    }
  });
  return run;
}

struct IndividualRun {
  std::vector<LabelMatrix> predictions;
  std::vector<double> accuracies;
};

inline IndividualRun run_individual(const std::vector<PartyData>& parties,
                                    const std::vector<MapperSpec>& specs,
                                    const LearnerParams& learner) {
  if (parties.empty() || parties.size() != specs.size()) {
    throw ConfigError("individual analysis needs one mapper spec per party");
  }
  IndividualRun run;
  for (std::size_t i = 0; i < parties.size(); ++i) {
    const Mapper f = in_phase(kPhaseIndividual, [&] {
      return fit_mapper(specs[i], parties[i].x_train);
    });
    const TrainedModel model = train(f.apply(parties[i].x_train), parties[i].labels, learner);
    run.predictions.push_back(predict(model, f.apply(parties[i].y_test)));
    run.accuracies.push_back(accuracy(run.predictions.back(), parties[i].test_labels));
  }
  return run;
}

struct CentralizedRun {
  LabelMatrix predictions;  // pooled test sets in party order
  LabelMatrix truth;
  double accuracy = 0.0;
};

// Pools raw data and fits a single PCA of dimension ell.
inline CentralizedRun run_centralized(const std::vector<PartyData>& parties,
                                      Index ell, const LearnerParams& learner) {
  if (parties.empty()) throw ConfigError("centralized analysis needs data");
  std::vector<Matrix> xs, ys;
  std::vector<LabelMatrix> ls, ts;
  for (const auto& p : parties) {
    xs.push_back(p.x_train);
    ys.push_back(p.y_test);
    ls.push_back(p.labels);
    ts.push_back(p.test_labels);
  }
  const Matrix x = hstack(xs);
  const Mapper f = fit_pca(x, ell);
  const TrainedModel model = train(f.apply(x), concat_labels(ls), learner);
  CentralizedRun run;
  run.predictions = predict(model, f.apply(hstack(ys)));
  run.truth = concat_labels(ts);
  run.accuracy = accuracy(run.predictions, run.truth);
  return run;
}

// Accuracy over the concatenation of every party's test predictions.
inline double pooled_accuracy(const std::vector<LabelMatrix>& predictions,
                              const std::vector<PartyData>& parties) {
  std::vector<LabelMatrix> truth;
  for (const auto& p : parties) truth.push_back(p.test_labels);
  return accuracy(concat_labels(predictions), concat_labels(truth));
}

}  // namespace dcollab

#endif  // DCOLLAB_PIPELINE_HPP_
