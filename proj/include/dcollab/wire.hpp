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

#ifndef DCOLLAB_WIRE_HPP_
#define DCOLLAB_WIRE_HPP_

// Binary framing for the coordinator/party exchange.
//
// frame   := length:u32 kind:u8 party:u16 session:u64 payload
// matrix  := rows:u32 cols:u32 entries:f64[rows*cols] (row-major)
// labels  := nclass:u32 (len:u32 utf8[len])[nclass] n:u32 index:u32[n]
// text    := len:u32 utf8[len]
//
// All integers and floats are little-endian. `length` counts the bytes
// after the length field itself.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dcollab/error.hpp"
#include "dcollab/learner.hpp"
#include "dcollab/linalg.hpp"

namespace dcollab {

enum class MessageKind : std::uint8_t {
  kHello = 1,
  kAnchor = 2,
  kIntermediateTrain = 3,
  kIntermediateAnchor = 4,
  kLabels = 5,
  kTestIntermediate = 6,
  kPredictions = 7,
  kError = 8,
  kBye = 9,
  kReady = 10,
};

inline std::string_view to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::kHello: return "HELLO";
    case MessageKind::kAnchor: return "ANCHOR";
    case MessageKind::kIntermediateTrain: return "INTERMEDIATE_TRAIN";
    case MessageKind::kIntermediateAnchor: return "INTERMEDIATE_ANCHOR";
    case MessageKind::kLabels: return "LABELS";
    case MessageKind::kTestIntermediate: return "TEST_INTERMEDIATE";
    case MessageKind::kPredictions: return "PREDICTIONS";
    case MessageKind::kError: return "ERROR";
    case MessageKind::kBye: return "BYE";
    case MessageKind::kReady: return "READY";
  }
  return "UNKNOWN";
}

enum class PayloadType { kEmpty, kMatrix, kLabels, kText };

inline PayloadType payload_type(MessageKind kind) {
  switch (kind) {
    case MessageKind::kHello:
    case MessageKind::kBye:
    case MessageKind::kReady:
      return PayloadType::kEmpty;
    case MessageKind::kAnchor:
    case MessageKind::kIntermediateTrain:
    case MessageKind::kIntermediateAnchor:
    case MessageKind::kTestIntermediate:
      return PayloadType::kMatrix;
    case MessageKind::kLabels:
    case MessageKind::kPredictions:
      return PayloadType::kLabels;
    case MessageKind::kError:
      return PayloadType::kText;
  }
  return PayloadType::kEmpty;
}

inline constexpr std::uint16_t kAnyParty = 0xFFFF;
inline constexpr std::size_t kHeaderBytes = 4 + 1 + 2 + 8;
inline constexpr std::uint32_t kDefaultFrameCap = 256u * 1024u * 1024u;

using Payload = std::variant<std::monostate, Matrix, LabelMatrix, std::string>;

struct Message {
  MessageKind kind = MessageKind::kHello;
  std::uint16_t party_id = 0;
  std::uint64_t session = 0;
  Payload payload;

  const Matrix& matrix() const { return std::get<Matrix>(payload); }
  const LabelMatrix& labels() const { return std::get<LabelMatrix>(payload); }
  const std::string& text() const { return std::get<std::string>(payload); }
};

inline bool operator==(const Message& a, const Message& b) {
  if (a.kind != b.kind || a.party_id != b.party_id || a.session != b.session ||
      a.payload.index() != b.payload.index()) {
    return false;
  }
  if (const auto* m = std::get_if<Matrix>(&a.payload)) {
    const Matrix& n = b.matrix();
    if (m->rows() != n.rows() || m->cols() != n.cols()) return false;
    return std::memcmp(m->data(), n.data(),
                       sizeof(double) * static_cast<std::size_t>(m->size())) == 0;
  }
  if (const auto* l = std::get_if<LabelMatrix>(&a.payload)) return *l == b.labels();
  if (const auto* s = std::get_if<std::string>(&a.payload)) return *s == b.text();
  return true;
}

inline Message make_message(MessageKind kind, std::uint16_t party,
                            std::uint64_t session, Payload payload = {}) {
  return Message{kind, party, session, std::move(payload)};
}

namespace detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t remaining() const noexcept { return bytes_.size() - at_; }

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }

  std::string text(std::size_t n) {
    need(n);
    std::string out(reinterpret_cast<const char*>(bytes_.data() + at_), n);
    at_ += n;
    return out;
  }

  void need(std::size_t n) const {
    if (n > remaining()) {
      throw DecodeError("truncated frame: need " + std::to_string(n) +
                        " bytes at offset " + std::to_string(at_) + ", have " +
                        std::to_string(remaining()));
    }
  }

 private:
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(bytes_[at_ + i]) << (8 * i);
    }
    at_ += static_cast<std::size_t>(n);
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t at_ = 0;
};

inline void write_matrix(ByteWriter& w, const Matrix& m) {
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) w.f64(m(i, j));
  }
}

inline Matrix read_matrix(ByteReader& r) {
  const std::uint64_t rows = r.u32();
  const std::uint64_t cols = r.u32();
  if (rows == 0 || cols == 0) {
    throw DecodeError("matrix payload with zero dimension " +
                      std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (rows * cols > r.remaining() / 8 || rows * cols * 8 != r.remaining()) {
    throw DecodeError("matrix payload " + std::to_string(rows) + "x" +
                      std::to_string(cols) + " does not match " +
                      std::to_string(r.remaining()) + " payload bytes");
  }
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      const double v = r.f64();
      if (!std::isfinite(v)) throw DecodeError("matrix payload has a non-finite entry");
      m(i, j) = v;
    }
  }
  return m;
}

inline void write_labels(ByteWriter& w, const LabelMatrix& l) {
  w.u32(static_cast<std::uint32_t>(l.classes.size()));
  for (const auto& c : l.classes) {
    w.u32(static_cast<std::uint32_t>(c.size()));
    w.raw(c);
  }
  w.u32(static_cast<std::uint32_t>(l.indices.size()));
  for (auto i : l.indices) w.u32(i);
}

inline LabelMatrix read_labels(ByteReader& r) {
  LabelMatrix out;
  const std::uint32_t nclass = r.u32();
  if (nclass == 0) throw DecodeError("label payload with empty class table");
  // Each class costs at least its 4-byte length.
  r.need(static_cast<std::size_t>(nclass) * 4);
  out.classes.reserve(nclass);
  for (std::uint32_t c = 0; c < nclass; ++c) out.classes.push_back(r.text(r.u32()));
  const std::uint32_t n = r.u32();
  if (static_cast<std::uint64_t>(n) * 4 != r.remaining()) {
    throw DecodeError("label payload declares " + std::to_string(n) +
                      " indices but carries " + std::to_string(r.remaining()) +
                      " bytes");
  }
  out.indices.reserve(n);
  for (std::uint32_t k = 0; k < n; ++k) {
    const std::uint32_t idx = r.u32();
    if (idx >= nclass) {
      throw DecodeError("label index " + std::to_string(idx) +
                        " outside class table of size " + std::to_string(nclass));
    }
    out.indices.push_back(idx);
  }
  return out;
}

}  // namespace detail

inline std::vector<std::uint8_t> encode(const Message& msg) {
  detail::ByteWriter w;
  w.u32(0);  // patched below
  w.u8(static_cast<std::uint8_t>(msg.kind));
  w.u16(msg.party_id);
  w.u64(msg.session);
  const PayloadType expected = payload_type(msg.kind);
  auto mismatch = [&] {
    return ProtocolError(std::string("payload does not fit message kind ") +
                         std::string(to_string(msg.kind)));
  };
  switch (expected) {
    case PayloadType::kEmpty:
      if (!std::holds_alternative<std::monostate>(msg.payload)) throw mismatch();
      break;
    case PayloadType::kMatrix:
      if (!std::holds_alternative<Matrix>(msg.payload)) throw mismatch();
      require_valid(msg.matrix(), "message matrix");
      detail::write_matrix(w, msg.matrix());
      break;
    case PayloadType::kLabels:
      if (!std::holds_alternative<LabelMatrix>(msg.payload)) throw mismatch();
      msg.labels().validate();
      detail::write_labels(w, msg.labels());
      break;
    case PayloadType::kText:
      if (!std::holds_alternative<std::string>(msg.payload)) throw mismatch();
      w.u32(static_cast<std::uint32_t>(msg.text().size()));
      w.raw(msg.text());
      break;
  }
  auto& bytes = w.bytes();
  const std::uint64_t length = bytes.size() - 4;
  if (length > 0xFFFFFFFFull) throw ProtocolError("message too large to frame");
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<std::uint8_t>(length >> (8 * i));
  return std::move(bytes);
}

// Decodes one complete frame, including its length prefix.
inline Message decode(std::span<const std::uint8_t> frame,
                      std::uint32_t cap = kDefaultFrameCap) {
  detail::ByteReader r(frame);
  const std::uint32_t length = r.u32();
  if (length > cap) {
    throw DecodeError("frame length " + std::to_string(length) +
                      " exceeds cap " + std::to_string(cap));
  }
  if (length != r.remaining()) {
    throw DecodeError("frame declares " + std::to_string(length) +
                      " bytes but " + std::to_string(r.remaining()) + " follow");
  }
  Message msg;
  const std::uint8_t tag = r.u8();
  if (tag < 1 || tag > 10) throw DecodeError("unknown message kind " + std::to_string(tag));
  msg.kind = static_cast<MessageKind>(tag);
  msg.party_id = r.u16();
  msg.session = r.u64();
  switch (payload_type(msg.kind)) {
    case PayloadType::kEmpty:
      break;
    case PayloadType::kMatrix:
      msg.payload = detail::read_matrix(r);
      break;
    case PayloadType::kLabels:
      msg.payload = detail::read_labels(r);
      break;
    case PayloadType::kText:
      msg.payload = r.text(r.u32());
      break;
  }
  if (r.remaining() != 0) {
    throw DecodeError(std::to_string(r.remaining()) + " trailing payload bytes after " +
                      std::string(to_string(msg.kind)));
  }
  return msg;
}

}  // namespace dcollab

#endif  // DCOLLAB_WIRE_HPP_
