// SPDX-License-Identifier: Apache-2.0
#include "emovc/error.hpp"

namespace emovc {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::contract_violation: return "contract violation";
    case ErrorCode::non_finite: return "non-finite value";
    case ErrorCode::degenerate: return "degenerate input";
    case ErrorCode::configuration: return "configuration error";
    case ErrorCode::io: return "I/O error";
    case ErrorCode::insufficient_input: return "insufficient input";
    case ErrorCode::undefined_metric: return "undefined metric";
  }
  return "unknown error";
}

}  // namespace emovc
