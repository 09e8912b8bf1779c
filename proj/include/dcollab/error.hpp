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

#ifndef DCOLLAB_ERROR_HPP_
#define DCOLLAB_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dcollab {

// Process exit codes used by the command line tool.
enum class ExitCode : int {
  kOk = 0,
  kIo = 1,
  kConfig = 2,
  kNumeric = 3,
  kProtocol = 4,
};

// Base of every error thrown by the library. A phase label can be attached
// while the error propagates through the experiment runner.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& message)
      : std::runtime_error(message), message_(message), full_(message) {}

  virtual ExitCode exit_code() const noexcept = 0;
  virtual const char* category() const noexcept = 0;

  const char* what() const noexcept override { return full_.c_str(); }
  const std::string& message() const noexcept { return message_; }
  const std::string& phase() const noexcept { return phase_; }

  void set_phase(std::string phase) {
    phase_ = std::move(phase);
    full_ = phase_.empty() ? message_ : phase_ + ": " + message_;
  }

 private:
  std::string message_;
  std::string phase_;
  std::string full_;
};

#define DCOLLAB_DEFINE_ERROR(Name, code, label)                 \
  class Name : public Error {                                   \
   public:                                                      \
    using Error::Error;                                         \
    ExitCode exit_code() const noexcept override { return code; } \
    const char* category() const noexcept override { return label; } \
  }

DCOLLAB_DEFINE_ERROR(DimensionError, ExitCode::kNumeric, "dimension error");
DCOLLAB_DEFINE_ERROR(ValidationError, ExitCode::kConfig, "validation error");
DCOLLAB_DEFINE_ERROR(ConfigError, ExitCode::kConfig, "config error");
DCOLLAB_DEFINE_ERROR(LoadError, ExitCode::kConfig, "load error");
DCOLLAB_DEFINE_ERROR(IoError, ExitCode::kIo, "io error");
DCOLLAB_DEFINE_ERROR(DecodeError, ExitCode::kProtocol, "decode error");
DCOLLAB_DEFINE_ERROR(ProtocolError, ExitCode::kProtocol, "protocol error");

#undef DCOLLAB_DEFINE_ERROR

// Raised when a matrix has lower numerical rank than an operation needs.
// Carries the singular values that were inspected.
class RankError : public Error {
 public:
  RankError(const std::string& message, std::vector<double> singular_values)
      : Error(message), singular_values_(std::move(singular_values)) {}
  explicit RankError(const std::string& message) : Error(message) {}

  ExitCode exit_code() const noexcept override { return ExitCode::kNumeric; }
  const char* category() const noexcept override { return "rank error"; }

  const std::vector<double>& singular_values() const noexcept {
    return singular_values_;
  }

 private:
  std::vector<double> singular_values_;
};

}  // namespace dcollab

#endif  // DCOLLAB_ERROR_HPP_
