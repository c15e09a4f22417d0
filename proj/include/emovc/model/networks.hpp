// SPDX-License-Identifier: Apache-2.0
//
// Generator, discriminator and emotion-classifier networks. Channel widths
// are the reference widths scaled by `rho` (rho = 1 reproduces 64/128/256 in
// the generator and 64..1024 in the discriminator).
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "emovc/ndgrad/ops.hpp"
#include "emovc/ndgrad/tensor.hpp"

namespace emovc::model {

std::size_t scaled_width(std::size_t reference, double rho);

struct ConvLayer {
  nd::ConvSpec spec;
  bool transposed = false;
  nd::Tensor weight;
  nd::Tensor bias;

  ConvLayer() = default;
  ConvLayer(nd::ConvSpec spec, bool transposed, std::mt19937_64& rng);
  nd::Tensor operator()(const nd::Tensor& x) const;
};

struct NormLayer {
  nd::Tensor scale;
  nd::Tensor shift;

  NormLayer() = default;
  explicit NormLayer(std::size_t channels);
  nd::Tensor operator()(const nd::Tensor& x) const;
};

class GeneratorNet {
 public:
  static constexpr std::size_t kResidualBlocks = 6;

  GeneratorNet(double rho, std::uint64_t seed);

  /// [B,1,H,W] -> [B,1,H,W]; H and W must be multiples of 4.
  nd::Tensor forward(const nd::Tensor& x) const;

  std::vector<nd::NamedTensor> parameters(const std::string& prefix) const;
  std::vector<nd::Tensor> parameter_tensors() const;
  /// Zeroes the second conv and norm of every residual branch, turning each block into the identity.
  void zero_residual_branches();
  /// Applies one residual block (used to test the additive skip in isolation).
  nd::Tensor residual_block(std::size_t index, const nd::Tensor& x) const;
  std::size_t residual_channels() const { return res_[0].conv_a.spec.in_channels; }
  double rho() const { return rho_; }

 private:
  struct Residual {
    ConvLayer conv_a, conv_b;
    NormLayer norm_a, norm_b;
  };
  double rho_;
  ConvLayer in_conv_, down1_, down2_, up1_, up2_, out_conv_;
  NormLayer in_norm_, down1_norm_, down2_norm_, up1_norm_, up2_norm_;
  std::vector<Residual> res_;
};

/// Patch-free discriminator: five stride-2 convs (LReLU 0.01) and an output
/// conv whose kernel spans the remaining map, giving one logit per item.
/// Also used, as a separate parameter set, for the emotion classifier.
class DiscriminatorNet {
 public:
  static constexpr double kLeakySlope = 0.01;

  DiscriminatorNet(double rho, std::size_t height, std::size_t width, std::uint64_t seed);

  /// [B,1,height,width] -> logits [B].
  nd::Tensor logits(const nd::Tensor& x) const;
  /// Sigmoid of the logits, one probability per batch item.
  nd::Tensor forward(const nd::Tensor& x) const;

  std::vector<nd::NamedTensor> parameters(const std::string& prefix) const;
  std::vector<nd::Tensor> parameter_tensors() const;
  std::size_t input_height() const { return height_; }
  std::size_t input_width() const { return width_; }
  /// Extents of the map entering the output conv (ceil(H/32) x ceil(W/32)).
  std::pair<std::size_t, std::size_t> head_extent() const { return {head_h_, head_w_}; }

 private:
  std::size_t height_, width_, head_h_, head_w_;
  std::vector<ConvLayer> body_;
  ConvLayer head_;
};

using ClassifierNet = DiscriminatorNet;

/// Copies values of `src` into same-named entries of `dst` (shape-checked).
void assign_parameters(const std::vector<nd::NamedTensor>& dst, const std::vector<nd::NamedTensor>& src);

}  // namespace emovc::model
