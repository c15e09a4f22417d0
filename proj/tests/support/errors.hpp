// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>

#include "doctest.h"
#include "emovc/error.hpp"

namespace emovc::testing {

/// Runs `f` and returns the code of the emovc::Error it throws.
inline ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an emovc::Error");
  return ErrorCode::contract_violation;
}

}  // namespace emovc::testing
