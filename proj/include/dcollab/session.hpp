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

#ifndef DCOLLAB_SESSION_HPP_
#define DCOLLAB_SESSION_HPP_

// Coordinator state machine. coordinator_step is a pure transition
// function: it never performs IO, it only returns the next state and the
// messages to deliver.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dcollab/collaboration.hpp"
#include "dcollab/learner.hpp"
#include "dcollab/wire.hpp"

namespace dcollab {

enum class Phase {
  kAwaitingParties,
  kCollecting,
  kCollaborating,
  kTrained,
  kPredicting,
  kDone,
};

inline std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::kAwaitingParties: return "awaiting-parties";
    case Phase::kCollecting: return "collecting";
    case Phase::kCollaborating: return "collaborating";
    case Phase::kTrained: return "trained";
    case Phase::kPredicting: return "predicting";
    case Phase::kDone: return "done";
  }
  return "unknown";
}

struct SessionConfig {
  std::uint64_t session = 1;
  std::size_t parties = 1;
  AnchorSet anchor;
  Index ell = 1;
  LearnerParams learner;
};

struct PartySlot {
  bool registered = false;
  std::optional<Matrix> train_tilde;
  std::optional<Matrix> anchor_tilde;
  std::optional<LabelMatrix> labels;
  std::optional<LabelMatrix> predictions;
  bool finished = false;

  bool delivered() const {
    return train_tilde && anchor_tilde && labels;
  }
};

struct SessionState {
  SessionConfig config;
  Phase phase = Phase::kAwaitingParties;
  std::vector<PartySlot> slots;
  std::optional<Collaboration> collaboration;
  std::optional<TrainedModel> model;
  std::string failure;  // set when the session ended in error

  static SessionState start(SessionConfig config) {
    if (config.parties < 1 || config.parties >= kAnyParty) {
      throw ConfigError("session needs between 1 and 65534 parties");
    }
    require_valid(config.anchor.x_anc, "session anchor");
    SessionState s;
    s.slots.resize(config.parties);
    s.config = std::move(config);
    return s;
  }

  bool all_registered() const {
    for (const auto& p : slots) if (!p.registered) return false;
    return true;
  }
  bool all_delivered() const {
    for (const auto& p : slots) if (!p.delivered()) return false;
    return true;
  }
  bool all_finished() const {
    for (const auto& p : slots) if (!p.finished) return false;
    return true;
  }
};

// Destination kAnyParty means "reply on the connection the input arrived on".
struct Outgoing {
  std::uint16_t to = kAnyParty;
  Message message;
};

struct StepResult {
  SessionState state;
  std::vector<Outgoing> outgoing;
};

namespace detail {

inline StepResult reject(SessionState state, const Message& in,
                         const std::string& why) {
  const std::uint16_t to =
      in.kind == MessageKind::kHello ? kAnyParty : in.party_id;
  StepResult r{std::move(state), {}};
  r.outgoing.push_back(Outgoing{
      to, make_message(MessageKind::kError, in.party_id,
                       r.state.config.session, std::string(why))});
  return r;
}

inline std::optional<std::string> check_party_data(const SessionState& s,
                                                   const PartySlot& slot,
                                                   const Message& in) {
  const Index r = s.config.anchor.count();
  switch (in.kind) {
    case MessageKind::kIntermediateAnchor: {
      const Matrix& a = in.matrix();
      if (a.cols() != r) return "anchor image must have " + std::to_string(r) + " columns";
      if (a.rows() > r) return "intermediate dimension exceeds anchor count";
      if (slot.train_tilde && slot.train_tilde->rows() != a.rows()) {
        return "anchor image and training representation dimensions differ";
      }
      break;
    }
    case MessageKind::kIntermediateTrain: {
      const Matrix& t = in.matrix();
      if (t.rows() > r) return "intermediate dimension exceeds anchor count";
      if (slot.anchor_tilde && slot.anchor_tilde->rows() != t.rows()) {
        return "anchor image and training representation dimensions differ";
      }
      if (slot.labels && static_cast<std::size_t>(t.cols()) != slot.labels->size()) {
        return "label count differs from training sample count";
      }
      break;
    }
    case MessageKind::kLabels:
      if (slot.train_tilde &&
          static_cast<std::size_t>(slot.train_tilde->cols()) != in.labels().size()) {
        return "label count differs from training sample count";
      }
      if (in.labels().size() == 0) return "empty label block";
      break;
    default:
      break;
  }
  return std::nullopt;
}

// Phase 2 and the training half of phase 3, run once all data is in.
inline void collaborate(SessionState& s, std::vector<Outgoing>& out) {
  s.phase = Phase::kCollaborating;
  std::vector<Matrix> anchors;
  std::vector<Matrix> trains;
  std::vector<LabelMatrix> labels;
  for (const auto& p : s.slots) {
    anchors.push_back(*p.anchor_tilde);
    trains.push_back(*p.train_tilde);
    labels.push_back(*p.labels);
  }
  try {
    Collaboration c = build_collaboration(anchors, trains, s.config.ell);
    TrainedModel m = train(c.x_hat, concat_labels(labels), s.config.learner);
    s.collaboration = std::move(c);
    s.model = std::move(m);
    s.phase = Phase::kTrained;
    for (std::size_t i = 0; i < s.slots.size(); ++i) {
      out.push_back(Outgoing{static_cast<std::uint16_t>(i),
                             make_message(MessageKind::kReady,
                                          static_cast<std::uint16_t>(i),
                                          s.config.session)});
    }
  } catch (const Error& e) {
    s.phase = Phase::kDone;
    s.failure = std::string(e.category()) + ": " + e.message();
    for (std::size_t i = 0; i < s.slots.size(); ++i) {
      out.push_back(Outgoing{static_cast<std::uint16_t>(i),
                             make_message(MessageKind::kError,
                                          static_cast<std::uint16_t>(i),
                                          s.config.session, s.failure)});
    }
  }
}

}  // namespace detail

inline StepResult coordinator_step(SessionState state, const Message& in) {
  using detail::reject;
  const std::uint64_t session = state.config.session;
  if (state.phase == Phase::kDone) {
    return reject(std::move(state), in, "phase violation: session is over");
  }

  if (in.kind == MessageKind::kHello) {
    if (state.phase != Phase::kAwaitingParties) {
      return reject(std::move(state), in, "phase violation: registration closed");
    }
    std::size_t slot = in.party_id;
    if (in.party_id == kAnyParty) {
      slot = 0;
      while (slot < state.slots.size() && state.slots[slot].registered) ++slot;
    }
    if (slot >= state.slots.size()) {
      return reject(std::move(state), in,
                    "no free party slot " + std::to_string(in.party_id));
    }
    if (state.slots[slot].registered) {
      return reject(std::move(state), in,
                    "duplicate HELLO for party " + std::to_string(slot));
    }
    state.slots[slot].registered = true;
    if (state.all_registered()) state.phase = Phase::kCollecting;
    const auto id = static_cast<std::uint16_t>(slot);
    StepResult r{std::move(state), {}};
    r.outgoing.push_back(Outgoing{
        kAnyParty, make_message(MessageKind::kAnchor, id, session,
                                r.state.config.anchor.x_anc)});
    return r;
  }

  if (in.session != session) {
    return reject(std::move(state), in, "session mismatch");
  }
  if (in.party_id >= state.slots.size() || !state.slots[in.party_id].registered) {
    return reject(std::move(state), in,
                  "party " + std::to_string(in.party_id) + " is not registered");
  }
  PartySlot& slot = state.slots[in.party_id];

  switch (in.kind) {
    case MessageKind::kIntermediateTrain:
    case MessageKind::kIntermediateAnchor:
    case MessageKind::kLabels: {
      if (state.phase != Phase::kAwaitingParties &&
          state.phase != Phase::kCollecting) {
        return reject(std::move(state), in, "phase violation");
      }
      const bool duplicate =
          (in.kind == MessageKind::kIntermediateTrain && slot.train_tilde) ||
          (in.kind == MessageKind::kIntermediateAnchor && slot.anchor_tilde) ||
          (in.kind == MessageKind::kLabels && slot.labels);
      if (duplicate) {
        return reject(std::move(state), in,
                      std::string("duplicate ") + std::string(to_string(in.kind)));
      }
      if (auto bad = detail::check_party_data(state, slot, in)) {
        return reject(std::move(state), in, *bad);
      }
      if (in.kind == MessageKind::kIntermediateTrain) slot.train_tilde = in.matrix();
      if (in.kind == MessageKind::kIntermediateAnchor) slot.anchor_tilde = in.matrix();
      if (in.kind == MessageKind::kLabels) slot.labels = in.labels();
      StepResult r{std::move(state), {}};
      if (r.state.phase == Phase::kCollecting && r.state.all_delivered()) {
        detail::collaborate(r.state, r.outgoing);
      }
      return r;
    }
    case MessageKind::kTestIntermediate: {
      if (state.phase != Phase::kTrained && state.phase != Phase::kPredicting) {
        return reject(std::move(state), in, "phase violation");
      }
      if (slot.predictions) {
        return reject(std::move(state), in, "duplicate TEST_INTERMEDIATE");
      }
      LabelMatrix predicted;
      try {
        const Matrix y_hat = transform_test(state.collaboration->transform,
                                            in.party_id, in.matrix());
        predicted = predict(*state.model, y_hat);
      } catch (const Error& e) {
        return reject(std::move(state), in, e.message());
      }
      slot.predictions = predicted;
      state.phase = Phase::kPredicting;
      StepResult r{std::move(state), {}};
      r.outgoing.push_back(Outgoing{
          in.party_id, make_message(MessageKind::kPredictions, in.party_id,
                                    session, std::move(predicted))});
      return r;
    }
    case MessageKind::kBye: {
      if (!slot.predictions || slot.finished) {
        return reject(std::move(state), in, "phase violation: BYE before predictions");
      }
      slot.finished = true;
      if (state.all_finished()) state.phase = Phase::kDone;
      return StepResult{std::move(state), {}};
    }
    case MessageKind::kError: {
      state.phase = Phase::kDone;
      state.failure = "party " + std::to_string(in.party_id) + " aborted: " + in.text();
      return StepResult{std::move(state), {}};
    }
    default:
      return reject(std::move(state), in,
                    std::string("unexpected ") + std::string(to_string(in.kind)) +
                        " from party");
  }
}

}  // namespace dcollab

#endif  // DCOLLAB_SESSION_HPP_
