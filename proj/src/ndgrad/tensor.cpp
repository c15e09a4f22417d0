// SPDX-License-Identifier: Apache-2.0
#include "emovc/ndgrad/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "emovc/error.hpp"

namespace emovc::nd {

namespace {
thread_local bool g_grad_enabled = true;
}

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

std::vector<double>& TensorData::grad_buffer() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  return grad;
}

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) { return full(shape, 0.0, requires_grad); }

Tensor Tensor::full(const Shape& shape, double v, bool requires_grad) {
  return from(shape, std::vector<double>(numel(shape), v), requires_grad);
}

Tensor Tensor::from(const Shape& shape, std::vector<double> values, bool requires_grad) {
  for (auto e : shape)
    if (e < 1) fail(ErrorCode::contract_violation, "tensor extents must be >= 1, got " + shape_str(shape));
  if (numel(shape) != values.size())
    fail(ErrorCode::contract_violation,
         "tensor data length " + std::to_string(values.size()) + " does not match shape " + shape_str(shape));
  auto d = std::make_shared<TensorData>();
  d->shape = shape;
  d->value = std::move(values);
  d->requires_grad = requires_grad;
  return Tensor(std::move(d));
}

Tensor Tensor::scalar(double v, bool requires_grad) { return from({1}, {v}, requires_grad); }

const Shape& Tensor::shape() const {
  require(defined(), "use of undefined tensor");
  return impl_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= rank())
    fail(ErrorCode::contract_violation, "axis " + std::to_string(axis) + " out of range for " + shape_str(shape()));
  return impl_->shape[axis];
}

std::size_t Tensor::size() const { return impl_ ? impl_->value.size() : 0; }

std::span<const double> Tensor::data() const {
  require(defined(), "use of undefined tensor");
  return impl_->value;
}

std::span<double> Tensor::mutable_data() {
  require(defined(), "use of undefined tensor");
  return impl_->value;
}

double Tensor::item() const {
  if (size() != 1)
    fail(ErrorCode::contract_violation, "item() requires a single-element tensor, got " + shape_str(shape()));
  return impl_->value[0];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }
bool Tensor::is_leaf() const { return impl_ && !impl_->node; }
bool Tensor::has_grad() const { return impl_ && impl_->grad.size() == impl_->value.size(); }

std::span<const double> Tensor::grad() const {
  require(has_grad(), "tensor has no populated gradient");
  return impl_->grad;
}

std::span<double> Tensor::mutable_grad() {
  require(defined(), "use of undefined tensor");
  return impl_->grad_buffer();
}

void Tensor::zero_grad() {
  if (impl_) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::detach() const { return clone(false); }

Tensor Tensor::clone(bool requires_grad) const {
  return from(shape(), impl_->value, requires_grad);
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
                   std::function<void(const TensorData& out)> backward_fn) {
  auto d = std::make_shared<TensorData>();
  d->shape = std::move(shape);
  d->value = std::move(value);
  const bool track = g_grad_enabled &&
                     std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
  if (track) {
    d->requires_grad = true;
    auto node = std::make_shared<Node>();
    node->inputs.reserve(inputs.size());
    for (auto& t : inputs) node->inputs.push_back(t.impl());
    node->backward = std::move(backward_fn);
    d->node = std::move(node);
  }
  return Tensor(std::move(d));
}

void backward(const Tensor& loss) {
  require(loss.defined() && loss.size() == 1,
          "backward() requires a scalar loss, got " + (loss.defined() ? shape_str(loss.shape()) : "undefined"));
  require(loss.requires_grad(), "backward() called on an untracked graph: nothing to differentiate");

  // Iterative post-order DFS gives a topological order (inputs before outputs).
  std::vector<TensorData*> order;
  std::unordered_set<TensorData*> visited;
  std::vector<std::pair<TensorData*, std::size_t>> stack;
  stack.emplace_back(loss.impl().get(), 0);
  visited.insert(loss.impl().get());
  while (!stack.empty()) {
    auto& [t, next] = stack.back();
    if (t->node && next < t->node->inputs.size()) {
      TensorData* child = t->node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
      continue;
    }
    order.push_back(t);
    stack.pop_back();
  }

  // Interior gradients are recomputed from scratch; leaves accumulate.
  for (auto* t : order)
    if (t->node) std::fill(t->grad_buffer().begin(), t->grad_buffer().end(), 0.0);
  for (auto* t : order)
    if (!t->node) t->grad_buffer();

  loss.impl()->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorData* t = *it;
    if (!t->node || !t->node->backward) continue;
    for (auto& in : t->node->inputs)
      if (in->requires_grad) in->grad_buffer();
    t->node->backward(*t);
  }
}

}  // namespace emovc::nd
