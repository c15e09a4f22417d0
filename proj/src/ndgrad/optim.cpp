// SPDX-License-Identifier: Apache-2.0
#include "emovc/ndgrad/optim.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "emovc/error.hpp"

namespace emovc::nd {

Adam::Adam(std::vector<Tensor> params, AdamConfig config) : params_(std::move(params)) {
  require(config.learning_rate > 0.0, "Adam: learning rate must be positive");
  require(config.beta1 >= 0.0 && config.beta1 < 1.0 && config.beta2 >= 0.0 && config.beta2 < 1.0,
          "Adam: moment decay rates must lie in [0,1)");
  state_.config = config;
  for (const auto& p : params_) {
    require(p.requires_grad(), "Adam: parameter does not track gradients");
    state_.first_moment.emplace_back(p.size(), 0.0);
    state_.second_moment.emplace_back(p.size(), 0.0);
  }
}

bool Adam::step() {
  for (const auto& p : params_) {
    if (!p.has_grad()) continue;
    // Any NaN or infinity propagates into the sum.
    double probe = 0.0;
    for (double g : p.grad()) probe += g * 0.0;
    if (probe != 0.0 || std::isnan(probe)) {
      ++state_.skipped;
      return false;
    }
  }
  const auto& c = state_.config;
  ++state_.step;
  const double t = static_cast<double>(state_.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor p = params_[k];
    auto& m = state_.first_moment[k];
    auto& v = state_.second_moment[k];
    double* value = p.mutable_data().data();
    const double* grad = p.has_grad() ? p.grad().data() : nullptr;
    double* mm = m.data();
    double* vv = v.data();
    const std::size_t n = m.size();
    const double b1 = c.beta1, b2 = c.beta2, lr = c.learning_rate, eps = c.epsilon;
    const double inv1 = 1.0 / correction1, inv2 = 1.0 / correction2;
    for (std::size_t i = 0; i < n; ++i) {
      const double g = grad ? grad[i] : 0.0;
      mm[i] = b1 * mm[i] + (1.0 - b1) * g;
      vv[i] = b2 * vv[i] + (1.0 - b2) * g * g;
      value[i] -= lr * (mm[i] * inv1) / (std::sqrt(vv[i] * inv2) + eps);
    }
  }
  return true;
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void Adam::load_state(OptimState state) {
  require(state.first_moment.size() == params_.size() && state.second_moment.size() == params_.size(),
          "Adam: state does not match parameter count");
  for (std::size_t k = 0; k < params_.size(); ++k)
    require(state.first_moment[k].size() == params_[k].size() && state.second_moment[k].size() == params_[k].size(),
            "Adam: moment shape does not match parameter " + std::to_string(k));
  state_ = std::move(state);
}

std::vector<NamedTensor> Adam::export_state(const std::string& prefix) const {
  std::vector<NamedTensor> out;
  out.push_back({prefix + "/step", Tensor::from({2}, {static_cast<double>(state_.step),
                                                      static_cast<double>(state_.skipped)})});
  for (std::size_t k = 0; k < params_.size(); ++k) {
    out.push_back({prefix + "/m/" + std::to_string(k), Tensor::from(params_[k].shape(), state_.first_moment[k])});
    out.push_back({prefix + "/v/" + std::to_string(k), Tensor::from(params_[k].shape(), state_.second_moment[k])});
  }
  return out;
}

void Adam::import_state(const std::string& prefix, const std::vector<NamedTensor>& tensors) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& t : tensors) by_name[t.name] = &t.tensor;
  auto get = [&](const std::string& name) -> const Tensor& {
    auto it = by_name.find(name);
    if (it == by_name.end()) fail(ErrorCode::configuration, "optimizer state entry missing: " + name);
    return *it->second;
  };
  OptimState s;
  s.config = state_.config;
  const Tensor& step = get(prefix + "/step");
  require(step.size() == 2, "optimizer step record malformed");
  s.step = static_cast<std::uint64_t>(step.at(0));
  s.skipped = static_cast<std::uint64_t>(step.at(1));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const Tensor& m = get(prefix + "/m/" + std::to_string(k));
    const Tensor& v = get(prefix + "/v/" + std::to_string(k));
    s.first_moment.emplace_back(m.data().begin(), m.data().end());
    s.second_moment.emplace_back(v.data().begin(), v.data().end());
  }
  load_state(std::move(s));
}

}  // namespace emovc::nd
