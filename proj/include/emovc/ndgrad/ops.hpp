// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "emovc/ndgrad/tensor.hpp"

namespace emovc::nd {

struct Padding {
  std::size_t top = 0, bottom = 0, left = 0, right = 0;
  static Padding uniform(std::size_t p) { return {p, p, p, p}; }
};

/// Kernel geometry in kh x kw x Cin x Cout notation.
struct ConvSpec {
  std::size_t kernel_h = 1, kernel_w = 1;
  std::size_t in_channels = 1, out_channels = 1;
  std::size_t stride = 1;
  Padding padding;

  void validate() const;
  // conv2d weights: [Cout, Cin, kh, kw]; transposed conv weights: [Cin, Cout, kh, kw].
  Shape weight_shape(bool transposed = false) const;
  std::size_t conv_out_h(std::size_t h) const;
  std::size_t conv_out_w(std::size_t w) const;
  std::size_t transpose_out_h(std::size_t h) const;
  std::size_t transpose_out_w(std::size_t w) const;
};

// --- layers -----------------------------------------------------------------

/// Cross-correlation over a [B,Cin,H,W] input. `bias` may be undefined.
Tensor conv2d(const Tensor& input, const ConvSpec& spec, const Tensor& weight, const Tensor& bias);

/// Gradient-of-conv2d style upsampling; padding crops the full output.
Tensor conv_transpose2d(const Tensor& input, const ConvSpec& spec, const Tensor& weight, const Tensor& bias);

/// Per (batch, channel) slice standardisation using population variance.
Tensor instance_norm(const Tensor& input, const Tensor& scale, const Tensor& shift, double eps = 1e-5);

// --- activations ------------------------------------------------------------

enum class Activation { relu, leaky_relu, sigmoid };

Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double alpha);
Tensor sigmoid(const Tensor& x);
Tensor activate(const Tensor& x, Activation kind, double alpha = 0.01);

// --- elementwise and reductions ---------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor square(const Tensor& a);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor reshape(const Tensor& a, const Shape& shape);
/// Items [begin, end) along axis 0.
Tensor slice_batch(const Tensor& a, std::size_t begin, std::size_t end);
Tensor concat_batch(const std::vector<Tensor>& parts);

// --- losses (scalar outputs) ------------------------------------------------

/// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before any log.
inline constexpr double kProbClamp = 1e-7;

enum class LossKind { l1, bce, gan_log };

/// Mean absolute difference.
Tensor l1_loss(const Tensor& pred, const Tensor& target);
/// Mean binary cross-entropy of probabilities `pred` against targets in [0,1].
Tensor bce_loss(const Tensor& pred, const Tensor& target);
/// Mean of log p over all elements.
Tensor gan_log(const Tensor& p);
/// Mean of log(1 - p) over all elements.
Tensor gan_log_complement(const Tensor& p);
Tensor loss(const Tensor& pred, const Tensor& target, LossKind kind);

}  // namespace emovc::nd
