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

#ifndef DCOLLAB_NETWORK_HPP_
#define DCOLLAB_NETWORK_HPP_

// The two protocol roles over a byte stream. A party sends only the images
// of its data under its private map (training, anchor, test) and its
// training labels; the raw data and the map itself stay local.

#include <atomic>
#include <chrono>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "dcollab/pipeline.hpp"
#include "dcollab/session.hpp"
#include "dcollab/transport.hpp"

namespace dcollab {

struct PartyResult {
  std::uint16_t party_id = 0;
  std::uint64_t session = 0;
  LabelMatrix predictions;
};

namespace detail {

inline Message expect(Channel& ch, MessageKind kind) {
  Message msg = receive_message(ch);
  if (msg.kind == MessageKind::kError) {
    throw ProtocolError("coordinator reported: " + msg.text());
  }
  if (msg.kind != kind) {
    throw ProtocolError("expected " + std::string(to_string(kind)) + ", got " +
                        std::string(to_string(msg.kind)));
  }
  return msg;
}

}  // namespace detail

// Runs one party through a session. `slot` requests a party index, or
// kAnyParty to take the first free one.
inline PartyResult party_run(const MapperSpec& spec, const PartyData& data,
                             Channel& ch, std::uint16_t slot = kAnyParty) {
  send_message(ch, make_message(MessageKind::kHello, slot, 0));
  const Message anchor = detail::expect(ch, MessageKind::kAnchor);
  PartyResult result;
  result.party_id = anchor.party_id;
  result.session = anchor.session;
  auto send = [&](MessageKind kind, Payload payload) {
    send_message(ch, make_message(kind, result.party_id, result.session,
                                  std::move(payload)));
  };

  Matrix train_tilde, anchor_tilde, test_tilde;
  try {
    const Mapper f = fit_mapper(spec, data.x_train);
    train_tilde = f.apply(data.x_train);
    anchor_tilde = f.apply(anchor.matrix());
    test_tilde = f.apply(data.y_test);
  } catch (const Error& e) {
    send(MessageKind::kError, std::string(e.what()));
    throw;
  }
  send(MessageKind::kIntermediateTrain, std::move(train_tilde));
  send(MessageKind::kIntermediateAnchor, std::move(anchor_tilde));
  send(MessageKind::kLabels, data.labels);
  detail::expect(ch, MessageKind::kReady);
  send(MessageKind::kTestIntermediate, std::move(test_tilde));
  result.predictions = detail::expect(ch, MessageKind::kPredictions).labels();
  send(MessageKind::kBye, std::monostate{});
  return result;
}

// Accepts config.parties connections and drives the session to completion.
// Transitions are applied one at a time under a lock, in arrival order.
// The returned state carries `failure` when the session did not finish.
inline SessionState serve_session(TcpListener& listener, SessionConfig config,
                                  std::chrono::milliseconds timeout) {
  const std::size_t parties = config.parties;
  SessionState state = SessionState::start(std::move(config));
  std::vector<std::unique_ptr<TcpChannel>> channels;
  for (std::size_t i = 0; i < parties; ++i) {
    channels.push_back(std::make_unique<TcpChannel>(listener.accept(timeout)));
  }

  std::mutex mu;
  std::vector<Channel*> by_party(parties, nullptr);
  auto abort_all = [&](const std::string& why) {
    if (state.failure.empty()) state.failure = why;
    state.phase = Phase::kDone;
    for (auto& c : channels) c->shutdown();
  };

  auto serve = [&](Channel* ch) {
    while (true) {
      Message in;
      try {
        in = receive_message(*ch);
      } catch (const Error& e) {
        std::lock_guard lock(mu);
        if (state.phase != Phase::kDone) abort_all(e.what());
        return;
      }
      std::lock_guard lock(mu);
      if (state.phase == Phase::kDone && !state.failure.empty()) return;
      StepResult step = coordinator_step(std::move(state), in);
      state = std::move(step.state);
      try {
        for (const auto& out : step.outgoing) {
          Channel* dest = ch;
          if (out.to != kAnyParty) {
            dest = by_party.at(out.to);
          } else if (out.message.kind == MessageKind::kAnchor) {
            by_party.at(out.message.party_id) = ch;
          }
          if (dest) send_message(*dest, out.message);
        }
      } catch (const Error& e) {
        abort_all(e.what());
        return;
      }
      if (!state.failure.empty()) {
        abort_all(state.failure);
        return;
      }
      if (in.kind == MessageKind::kBye && in.party_id < parties &&
          by_party[in.party_id] == ch && state.slots[in.party_id].finished) {
        return;
      }
    }
  };

  std::vector<std::thread> workers;
  for (auto& c : channels) workers.emplace_back(serve, c.get());
  for (auto& w : workers) w.join();
  if (state.failure.empty() && state.phase != Phase::kDone) {
    state.failure = "session ended in phase " + std::string(to_string(state.phase));
  }
  return state;
}

}  // namespace dcollab

#endif  // DCOLLAB_NETWORK_HPP_
