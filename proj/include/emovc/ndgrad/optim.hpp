// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "emovc/ndgrad/tensor.hpp"

namespace emovc::nd {

struct AdamConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive-moment state; moment tensors mirror the parameter list order.
struct OptimState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::uint64_t skipped = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig config);

  /// Applies one bias-corrected update from the parameters' current grads.
  /// Returns false (and counts a skip) when any grad is non-finite; nothing
  /// is modified in that case.
  bool step();
  void zero_grad();

  const OptimState& state() const { return state_; }
  void load_state(OptimState state);
  const std::vector<Tensor>& params() const { return params_; }

  /// Moments flattened as named tensors for checkpointing ("<prefix>/m/<i>", "<prefix>/v/<i>", "<prefix>/step").
  std::vector<NamedTensor> export_state(const std::string& prefix) const;
  void import_state(const std::string& prefix, const std::vector<NamedTensor>& tensors);

 private:
  std::vector<Tensor> params_;
  OptimState state_;
};

}  // namespace emovc::nd
