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

#ifndef DCOLLAB_TRANSPORT_HPP_
#define DCOLLAB_TRANSPORT_HPP_

// Ordered reliable byte streams carrying length-prefixed frames.

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "dcollab/error.hpp"
#include "dcollab/wire.hpp"

namespace dcollab {

class Channel {
 public:
  virtual ~Channel() = default;
  virtual void send_frame(std::span<const std::uint8_t> frame) = 0;
  // Returns one complete frame including its length prefix.
  virtual std::vector<std::uint8_t> receive_frame() = 0;
  virtual void shutdown() {}
};

inline void send_message(Channel& ch, const Message& msg) {
  const auto frame = encode(msg);
  ch.send_frame(frame);
}

inline Message receive_message(Channel& ch, std::uint32_t cap = kDefaultFrameCap) {
  const auto frame = ch.receive_frame();
  return decode(frame, cap);
}

// Remembers every outbound frame of the wrapped channel.
class RecordingChannel : public Channel {
 public:
  explicit RecordingChannel(Channel& inner) : inner_(inner) {}

  void send_frame(std::span<const std::uint8_t> frame) override {
    {
      std::lock_guard lock(mu_);
      sent_.emplace_back(frame.begin(), frame.end());
    }
    inner_.send_frame(frame);
  }
  std::vector<std::uint8_t> receive_frame() override { return inner_.receive_frame(); }
  void shutdown() override { inner_.shutdown(); }

  std::vector<std::vector<std::uint8_t>> sent() const {
    std::lock_guard lock(mu_);
    return sent_;
  }

 private:
  Channel& inner_;
  mutable std::mutex mu_;
  std::vector<std::vector<std::uint8_t>> sent_;
};

class TcpChannel : public Channel {
 public:
  TcpChannel(int fd, std::uint32_t cap) : fd_(fd), cap_(cap) {}
  TcpChannel(const TcpChannel&) = delete;
  TcpChannel& operator=(const TcpChannel&) = delete;
  TcpChannel(TcpChannel&& other) noexcept : fd_(other.fd_), cap_(other.cap_) {
    other.fd_ = -1;
  }
  ~TcpChannel() override {
    if (fd_ >= 0) ::close(fd_);
  }

  void set_timeout(std::chrono::milliseconds timeout) {
    timeval tv{};
    tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
    tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    ::setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
  }

  void send_frame(std::span<const std::uint8_t> frame) override {
    std::size_t sent = 0;
    while (sent < frame.size()) {
      const ssize_t n = ::send(fd_, frame.data() + sent, frame.size() - sent,
                               MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw ProtocolError(std::string("send failed: ") + std::strerror(errno));
      }
      sent += static_cast<std::size_t>(n);
    }
  }

  std::vector<std::uint8_t> receive_frame() override {
    std::vector<std::uint8_t> frame(4);
    read_exact(frame.data(), 4);
    std::uint32_t length = 0;
    for (int i = 0; i < 4; ++i) length |= static_cast<std::uint32_t>(frame[i]) << (8 * i);
    if (length > cap_) {
      throw DecodeError("incoming frame length " + std::to_string(length) +
                        " exceeds cap " + std::to_string(cap_));
    }
    frame.resize(4 + static_cast<std::size_t>(length));
    read_exact(frame.data() + 4, length);
    return frame;
  }

  void shutdown() override {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
  }

 private:
  void read_exact(std::uint8_t* out, std::size_t n) {
    std::size_t got = 0;
    while (got < n) {
      const ssize_t k = ::recv(fd_, out + got, n - got, 0);
      if (k == 0) throw ProtocolError("connection closed by peer");
      if (k < 0) {
        if (errno == EINTR) continue;
        if (errno == EAGAIN || errno == EWOULDBLOCK) {
          throw ProtocolError("receive timed out");
        }
        throw ProtocolError(std::string("receive failed: ") + std::strerror(errno));
      }
      got += static_cast<std::size_t>(k);
    }
  }

  int fd_;
  std::uint32_t cap_;
};

namespace detail {

inline sockaddr_in resolve_ipv4(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  if (::getaddrinfo(host.c_str(), nullptr, &hints, &found) != 0 || !found) {
    throw ProtocolError("cannot resolve host '" + host + "'");
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(found->ai_addr)->sin_addr;
  ::freeaddrinfo(found);
  return addr;
}

}  // namespace detail

class TcpListener {
 public:
  TcpListener(const std::string& host, std::uint16_t port,
              std::uint32_t cap = kDefaultFrameCap)
      : cap_(cap) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw ProtocolError("socket() failed");
    int yes = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    sockaddr_in addr = detail::resolve_ipv4(host, port);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
        ::listen(fd_, 64) != 0) {
      const std::string why = std::strerror(errno);
      ::close(fd_);
      throw ProtocolError("cannot listen on " + host + ":" + std::to_string(port) +
                          ": " + why);
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
  }
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;
  ~TcpListener() {
    if (fd_ >= 0) ::close(fd_);
  }

  std::uint16_t port() const noexcept { return port_; }

  TcpChannel accept(std::chrono::milliseconds timeout) {
    pollfd p{fd_, POLLIN, 0};
    const int ready = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (ready <= 0) throw ProtocolError("timed out waiting for a party to connect");
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd < 0) throw ProtocolError(std::string("accept failed: ") + std::strerror(errno));
    int yes = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &yes, sizeof yes);
    TcpChannel ch(fd, cap_);
    ch.set_timeout(timeout);
    return ch;
  }

  // Closes the listening socket; safe to call before forking workers that
  // must not hold it.
  void close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
  std::uint32_t cap_;
};

// Connects, retrying until the deadline so parties may start before the
// coordinator is listening.
inline TcpChannel connect_tcp(const std::string& host, std::uint16_t port,
                              std::chrono::milliseconds timeout,
                              std::uint32_t cap = kDefaultFrameCap) {
  const sockaddr_in addr = detail::resolve_ipv4(host, port);
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw ProtocolError("socket() failed");
    if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) == 0) {
      int yes = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &yes, sizeof yes);
      TcpChannel ch(fd, cap);
      ch.set_timeout(timeout);
      return ch;
    }
    const std::string why = std::strerror(errno);
    ::close(fd);
    if (std::chrono::steady_clock::now() >= deadline) {
      throw ProtocolError("cannot connect to " + host + ":" + std::to_string(port) +
                          ": " + why);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

}  // namespace dcollab

#endif  // DCOLLAB_TRANSPORT_HPP_
