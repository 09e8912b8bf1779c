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

#include <random>

#include "dcollab/dataset.hpp"
#include "dcollab/pipeline.hpp"
#include "dcollab/session.hpp"
#include "oracles.hpp"

namespace dcollab {
namespace {

constexpr std::uint64_t kSession = 77;

SessionConfig small_config(std::size_t parties) {
  SessionConfig c;
  c.session = kSession;
  c.parties = parties;
  c.anchor = generate_anchor(4, 8, 3, AnchorGeneration::kStandardNormal);
  c.ell = 2;
  return c;
}

int order(Phase p) { return static_cast<int>(p); }

// Everything a party would send, in protocol order, for synthetic data.
struct Script {
  Message train, anchor, labels, test;
};

Script script_for(const SessionConfig& c, std::uint16_t party, std::uint32_t seed) {
  const Mapper f = fit_random_projection(4, 3, seed);
  const Matrix x = oracle::random_matrix(4, 6, seed);
  std::vector<std::string> names;
  for (Index j = 0; j < 6; ++j) names.push_back(x(0, j) > 0 ? "p" : "n");
  return Script{
      make_message(MessageKind::kIntermediateTrain, party, kSession, f.apply(x)),
      make_message(MessageKind::kIntermediateAnchor, party, kSession, f.apply(c.anchor.x_anc)),
      make_message(MessageKind::kLabels, party, kSession, LabelMatrix::from_names(names, {"n", "p"})),
      make_message(MessageKind::kTestIntermediate, party, kSession,
                   f.apply(oracle::random_matrix(4, 3, seed + 1)))};
}

std::string first_error(const StepResult& r) {
  for (const auto& o : r.outgoing) {
    if (o.message.kind == MessageKind::kError) return o.message.text();
  }
  return {};
}

struct Fingerprint {
  Phase phase;
  std::vector<std::array<bool, 6>> slots;
  bool operator==(const Fingerprint&) const = default;
};

Fingerprint fingerprint(const SessionState& s) {
  Fingerprint f{s.phase, {}};
  for (const auto& p : s.slots) {
    f.slots.push_back({p.registered, p.train_tilde.has_value(), p.anchor_tilde.has_value(),
                       p.labels.has_value(), p.predictions.has_value(), p.finished});
  }
  return f;
}

TEST(Session, HelloRepliesWithAnchor) {
  const SessionConfig c = small_config(2);
  const StepResult r = coordinator_step(SessionState::start(c),
                                        make_message(MessageKind::kHello, kAnyParty, 0));
  ASSERT_EQ(r.outgoing.size(), 1u);
  const Message& reply = r.outgoing[0].message;
  EXPECT_EQ(reply.kind, MessageKind::kAnchor);
  EXPECT_EQ(reply.party_id, 0);
  EXPECT_EQ(reply.session, kSession);
  EXPECT_EQ(reply.matrix(), c.anchor.x_anc);
  EXPECT_EQ(r.state.phase, Phase::kAwaitingParties);
  EXPECT_TRUE(r.state.slots[0].registered);
}

TEST(Session, HelloSlotRequests) {
  SessionState s = SessionState::start(small_config(3));
  s = coordinator_step(std::move(s), make_message(MessageKind::kHello, 2, 0)).state;
  StepResult r = coordinator_step(std::move(s), make_message(MessageKind::kHello, kAnyParty, 0));
  EXPECT_EQ(r.outgoing[0].message.party_id, 0);
  r = coordinator_step(std::move(r.state), make_message(MessageKind::kHello, 2, 0));
  EXPECT_NE(first_error(r).find("duplicate HELLO"), std::string::npos);
  r = coordinator_step(std::move(r.state), make_message(MessageKind::kHello, 5, 0));
  EXPECT_NE(first_error(r).find("no free party slot"), std::string::npos);
  r = coordinator_step(std::move(r.state), make_message(MessageKind::kHello, kAnyParty, 0));
  EXPECT_EQ(r.outgoing[0].message.party_id, 1);
  EXPECT_EQ(r.state.phase, Phase::kCollecting);
  r = coordinator_step(std::move(r.state), make_message(MessageKind::kHello, kAnyParty, 0));
  EXPECT_NE(first_error(r).find("phase violation"), std::string::npos);
}

TEST(Session, TestIntermediateBeforeTrainingIsPhaseViolation) {
  const SessionConfig c = small_config(2);
  SessionState s = SessionState::start(c);
  s = coordinator_step(std::move(s), make_message(MessageKind::kHello, kAnyParty, 0)).state;
  s = coordinator_step(std::move(s), make_message(MessageKind::kHello, kAnyParty, 0)).state;
  const Script p0 = script_for(c, 0, 10);
  const Fingerprint before = fingerprint(s);
  const StepResult r = coordinator_step(std::move(s), p0.test);
  EXPECT_EQ(first_error(r).rfind("phase violation", 0), 0u);
  EXPECT_EQ(r.outgoing[0].to, 0);
  EXPECT_EQ(fingerprint(r.state), before);
}

TEST(Session, DuplicatesAndBadDataLeaveStateUnchanged) {
  const SessionConfig c = small_config(1);
  SessionState s = SessionState::start(c);
  s = coordinator_step(std::move(s), make_message(MessageKind::kHello, kAnyParty, 0)).state;
  const Script p = script_for(c, 0, 20);
  s = coordinator_step(std::move(s), p.train).state;
  Fingerprint before = fingerprint(s);
  StepResult r = coordinator_step(std::move(s), p.train);
  EXPECT_NE(first_error(r).find("duplicate"), std::string::npos);
  EXPECT_EQ(fingerprint(r.state), before);

  Message wrong_r = p.anchor;
  wrong_r.payload = Matrix::Ones(3, 5);
  r = coordinator_step(std::move(r.state), wrong_r);
  EXPECT_FALSE(first_error(r).empty());
  EXPECT_EQ(fingerprint(r.state), before);

  Message short_labels = p.labels;
  short_labels.payload = LabelMatrix{{"n"}, {0}};
  r = coordinator_step(std::move(r.state), short_labels);
  EXPECT_NE(first_error(r).find("label count"), std::string::npos);

  Message foreign = p.anchor;
  foreign.session = kSession + 1;
  r = coordinator_step(std::move(r.state), foreign);
  EXPECT_EQ(first_error(r), "session mismatch");

  Message stranger = p.anchor;
  stranger.party_id = 4;
  r = coordinator_step(std::move(r.state), stranger);
  EXPECT_NE(first_error(r).find("not registered"), std::string::npos);

  r = coordinator_step(std::move(r.state), make_message(MessageKind::kPredictions, 0, kSession,
                                                        LabelMatrix{{"n"}, {0}}));
  EXPECT_NE(first_error(r).find("unexpected"), std::string::npos);
  EXPECT_EQ(fingerprint(r.state), before);
}

TEST(Session, FullExchangeReachesDone) {
  const SessionConfig c = small_config(2);
  SessionState s = SessionState::start(c);
  std::vector<Script> scripts = {script_for(c, 0, 30), script_for(c, 1, 40)};
  for (int i = 0; i < 2; ++i) {
    s = coordinator_step(std::move(s), make_message(MessageKind::kHello, kAnyParty, 0)).state;
  }
  for (const auto& p : scripts) {
    s = coordinator_step(std::move(s), p.labels).state;
    s = coordinator_step(std::move(s), p.anchor).state;
  }
  s = coordinator_step(std::move(s), scripts[0].train).state;
  EXPECT_EQ(s.phase, Phase::kCollecting);
  StepResult r = coordinator_step(std::move(s), scripts[1].train);
  EXPECT_EQ(r.state.phase, Phase::kTrained);
  ASSERT_EQ(r.outgoing.size(), 2u);
  for (std::uint16_t i = 0; i < 2; ++i) {
    EXPECT_EQ(r.outgoing[i].to, i);
    EXPECT_EQ(r.outgoing[i].message.kind, MessageKind::kReady);
  }
  r = coordinator_step(std::move(r.state), make_message(MessageKind::kBye, 0, kSession));
  EXPECT_NE(first_error(r).find("BYE before predictions"), std::string::npos);
  for (std::uint16_t i = 0; i < 2; ++i) {
    r = coordinator_step(std::move(r.state), scripts[i].test);
    ASSERT_EQ(r.outgoing.size(), 1u);
    EXPECT_EQ(r.outgoing[0].message.kind, MessageKind::kPredictions);
    EXPECT_EQ(r.outgoing[0].message.labels().size(), 3u);
    EXPECT_EQ(r.state.phase, Phase::kPredicting);
  }
  r = coordinator_step(std::move(r.state), scripts[0].test);
  EXPECT_NE(first_error(r).find("duplicate"), std::string::npos);
  r = coordinator_step(std::move(r.state), make_message(MessageKind::kBye, 0, kSession));
  EXPECT_EQ(r.state.phase, Phase::kPredicting);
  r = coordinator_step(std::move(r.state), make_message(MessageKind::kBye, 1, kSession));
  EXPECT_EQ(r.state.phase, Phase::kDone);
  EXPECT_TRUE(r.state.failure.empty());
  r = coordinator_step(std::move(r.state), scripts[0].test);
  EXPECT_NE(first_error(r).find("session is over"), std::string::npos);
}

TEST(Session, PartyErrorEndsSession) {
  SessionState s = SessionState::start(small_config(2));
  s = coordinator_step(std::move(s), make_message(MessageKind::kHello, kAnyParty, 0)).state;
  s = coordinator_step(std::move(s), make_message(MessageKind::kError, 0, kSession,
                                                  std::string("cannot fit"))).state;
  EXPECT_EQ(s.phase, Phase::kDone);
  EXPECT_NE(s.failure.find("cannot fit"), std::string::npos);
}

TEST(Session, CollaborationFailureIsBroadcast) {
  SessionConfig c = small_config(2);
  c.ell = 3;
  SessionState s = SessionState::start(c);
  // Two parties sending the same rank-1 anchor image cannot support ell = 3.
  const Matrix flat = Matrix::Ones(3, 8);
  std::vector<Outgoing> last;
  for (std::uint16_t i = 0; i < 2; ++i) {
    s = coordinator_step(std::move(s), make_message(MessageKind::kHello, kAnyParty, 0)).state;
  }
  for (std::uint16_t i = 0; i < 2; ++i) {
    s = coordinator_step(std::move(s), make_message(MessageKind::kIntermediateAnchor, i, kSession, flat)).state;
    s = coordinator_step(std::move(s), make_message(MessageKind::kIntermediateTrain, i, kSession, Matrix::Ones(3, 2))).state;
    auto r = coordinator_step(std::move(s), make_message(MessageKind::kLabels, i, kSession, LabelMatrix{{"a"}, {0, 0}}));
    s = std::move(r.state);
    last = std::move(r.outgoing);
  }
  EXPECT_EQ(s.phase, Phase::kDone);
  EXPECT_NE(s.failure.find("rank"), std::string::npos);
  ASSERT_EQ(last.size(), 2u);
  EXPECT_EQ(last[0].message.kind, MessageKind::kError);
  EXPECT_EQ(last[1].to, 1);
}

// Phase safety: random interleavings of valid, duplicate, foreign and
// malformed messages never start collaboration with missing party data and
// never move the phase backwards.
TEST(Session, RandomInterleavingsArePhaseSafe) {
  int trained_runs = 0;
  for (std::uint32_t seed = 0; seed < 300; ++seed) {
    std::mt19937 gen(seed);
    const std::size_t d = 1 + gen() % 3;
    const SessionConfig c = small_config(d);
    std::vector<Script> scripts;
    for (std::size_t i = 0; i < d; ++i) {
      scripts.push_back(script_for(c, static_cast<std::uint16_t>(i), 100 + seed * 7 + static_cast<std::uint32_t>(i)));
    }
    std::vector<Message> pool;
    for (std::size_t i = 0; i < d + 1; ++i) {
      pool.push_back(make_message(MessageKind::kHello, gen() % 2 ? kAnyParty : static_cast<std::uint16_t>(i), 0));
    }
    for (std::size_t i = 0; i < d; ++i) {
      const auto id = static_cast<std::uint16_t>(i);
      for (const Message* m : {&scripts[i].train, &scripts[i].anchor, &scripts[i].labels, &scripts[i].test}) {
        pool.push_back(*m);
        if (gen() % 4 == 0) pool.push_back(*m);
      }
      pool.push_back(make_message(MessageKind::kBye, id, kSession));
      if (gen() % 5 == 0) {
        Message bad = scripts[i].train;
        bad.payload = Matrix::Ones(5, 2);
        pool.push_back(bad);
      }
      if (gen() % 7 == 0) pool.push_back(make_message(MessageKind::kReady, id, kSession));
    }
    std::shuffle(pool.begin(), pool.end(), gen);

    SessionState s = SessionState::start(c);
    for (const auto& m : pool) {
      const int before = order(s.phase);
      const bool had_model = s.model.has_value();
      StepResult r = coordinator_step(std::move(s), m);
      s = std::move(r.state);
      EXPECT_GE(order(s.phase), before);
      if (s.model && !had_model) {
        ++trained_runs;
        EXPECT_TRUE(s.all_registered());
        Index columns = 0;
        for (const auto& slot : s.slots) {
          ASSERT_TRUE(slot.train_tilde && slot.anchor_tilde && slot.labels);
          columns += slot.train_tilde->cols();
        }
        EXPECT_EQ(s.collaboration->x_hat.cols(), columns);
      }
      if (s.phase >= Phase::kTrained && s.failure.empty()) {
        EXPECT_TRUE(s.model.has_value());
        EXPECT_TRUE(s.all_delivered());
      }
    }
  }
  EXPECT_GT(trained_runs, 0);
}

// A scripted exchange driven through coordinator_step reproduces the
// in-process pipeline bit for bit.
TEST(Session, ScriptedExchangeMatchesInProcess) {
  SynthParams sp;
  sp.features = 6;
  sp.parties = 2;
  sp.train_per_party = 20;
  sp.test_per_party = 10;
  sp.seed = 5;
  const auto parties = synth_imbalanced(sp);
  const std::vector<MapperSpec> specs = {{MapperKind::kPca, 3, 0, {}, {}},
                                         {MapperKind::kRandomProjection, 3, 9, {}, {}}};
  const AnchorSet anchor = generate_anchor(6, 12, 4, AnchorGeneration::kStandardNormal);
  const LearnerParams learner{};
  const CollaborationRun reference = run_collaboration(parties, specs, anchor, 3, learner);

  SessionConfig c;
  c.session = kSession;
  c.parties = 2;
  c.anchor = anchor;
  c.ell = 3;
  c.learner = learner;
  SessionState s = SessionState::start(c);
  std::vector<Mapper> fs;
  for (std::uint16_t i = 0; i < 2; ++i) {
    const StepResult r = coordinator_step(std::move(s), make_message(MessageKind::kHello, i, 0));
    s = r.state;
    fs.push_back(fit_mapper(specs[i], parties[i].x_train));
    const Matrix& x_anc = r.outgoing[0].message.matrix();
    s = coordinator_step(std::move(s), make_message(MessageKind::kIntermediateTrain, i, kSession,
                                                    fs[i].apply(parties[i].x_train))).state;
    s = coordinator_step(std::move(s), make_message(MessageKind::kIntermediateAnchor, i, kSession,
                                                    fs[i].apply(x_anc))).state;
    s = coordinator_step(std::move(s), make_message(MessageKind::kLabels, i, kSession,
                                                    parties[i].labels)).state;
  }
  ASSERT_EQ(s.phase, Phase::kTrained);
  EXPECT_EQ(s.collaboration->x_hat, reference.collaboration.x_hat);
  EXPECT_EQ(s.model->w, reference.model.w);
  for (std::uint16_t i = 0; i < 2; ++i) {
    StepResult r = coordinator_step(std::move(s), make_message(MessageKind::kTestIntermediate, i, kSession,
                                                               fs[i].apply(parties[i].y_test)));
    s = std::move(r.state);
    EXPECT_EQ(r.outgoing[0].message.labels(), reference.predictions[i]);
  }
}

TEST(Session, StartValidatesConfig) {
  SessionConfig c = small_config(0);
  EXPECT_THROW(SessionState::start(c), ConfigError);
}

}  // namespace
}  // namespace dcollab
