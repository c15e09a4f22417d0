// SPDX-License-Identifier: Apache-2.0
//
// Dense real tensors with an optional reverse-mode gradient tape.
//
// A Tensor is a cheap handle onto shared storage. Operations in ops.hpp
// record a backward closure on their output whenever any input requires a
// gradient; backward() walks that graph in reverse topological order.
// Leaf gradients accumulate across backward() calls until zero_grad().
#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace emovc::nd {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TensorData;

struct Node {
  std::vector<std::shared_ptr<TensorData>> inputs;
  // Reads the output's grad and accumulates into the inputs' grads.
  std::function<void(const TensorData& out)> backward;
};

struct TensorData {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::shared_ptr<Node> node;

  // Allocates the grad buffer on first use.
  std::vector<double>& grad_buffer();
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(const Shape& shape, bool requires_grad = false);
  static Tensor full(const Shape& shape, double v, bool requires_grad = false);
  static Tensor from(const Shape& shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const;

  std::span<const double> data() const;
  // Writable view for parameter initialisation and optimiser updates. Does not
  // invalidate recorded graphs, so only touch leaves between training steps.
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t flat) const { return data()[flat]; }

  bool requires_grad() const;
  bool is_leaf() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  // Untracked copy of the current values.
  Tensor detach() const;
  Tensor clone(bool requires_grad) const;

  const std::shared_ptr<TensorData>& impl() const { return impl_; }
  explicit Tensor(std::shared_ptr<TensorData> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<TensorData> impl_;
};

/// Populates gradients for every tracked tensor reachable from `loss`.
/// Throws contract_violation when `loss` is not a scalar or is untracked.
void backward(const Tensor& loss);

/// Disables graph recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// Helper used by ops: builds an output tensor and wires its backward closure
// when recording is enabled and some input is tracked.
Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
                   std::function<void(const TensorData& out)> backward_fn);

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

}  // namespace emovc::nd
