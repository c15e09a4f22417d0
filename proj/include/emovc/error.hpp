// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace emovc {

/// Failure categories shared by every module and mirrored by the C API status codes.
enum class ErrorCode {
  contract_violation = 1,
  non_finite = 2,
  degenerate = 3,
  configuration = 4,
  io = 5,
  insufficient_input = 6,
  undefined_metric = 7,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool cond, const char* msg) {
  if (!cond) fail(ErrorCode::contract_violation, msg);
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) fail(ErrorCode::contract_violation, msg);
}

}  // namespace emovc
