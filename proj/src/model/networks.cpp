// SPDX-License-Identifier: Apache-2.0
#include "emovc/model/networks.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "emovc/error.hpp"

namespace emovc::model {

using nd::ConvSpec;
using nd::Padding;
using nd::Tensor;

std::size_t scaled_width(std::size_t reference, double rho) {
  require(rho > 0.0 && rho <= 4.0, "channel scale rho must lie in (0, 4]");
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(reference) * rho)));
}

ConvLayer::ConvLayer(ConvSpec s, bool t, std::mt19937_64& rng) : spec(s), transposed(t) {
  spec.validate();
  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and bias.
  const std::size_t fan_in = (t ? spec.out_channels : spec.in_channels) * spec.kernel_h * spec.kernel_w;
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> w(nd::numel(spec.weight_shape(t)));
  for (auto& v : w) v = dist(rng);
  std::vector<double> b(spec.out_channels);
  for (auto& v : b) v = dist(rng);
  weight = Tensor::from(spec.weight_shape(t), std::move(w), true);
  bias = Tensor::from({spec.out_channels}, std::move(b), true);
}

Tensor ConvLayer::operator()(const Tensor& x) const {
  return transposed ? nd::conv_transpose2d(x, spec, weight, bias) : nd::conv2d(x, spec, weight, bias);
}

NormLayer::NormLayer(std::size_t channels)
    : scale(Tensor::full({channels}, 1.0, true)), shift(Tensor::zeros({channels}, true)) {}

Tensor NormLayer::operator()(const Tensor& x) const { return nd::instance_norm(x, scale, shift); }

GeneratorNet::GeneratorNet(double rho, std::uint64_t seed) : rho_(rho) {
  std::mt19937_64 rng(seed);
  const std::size_t c1 = scaled_width(64, rho), c2 = scaled_width(128, rho), c3 = scaled_width(256, rho);
  in_conv_ = ConvLayer({3, 9, 1, c1, 1, {1, 1, 4, 4}}, false, rng);
  in_norm_ = NormLayer(c1);
  down1_ = ConvLayer({4, 8, c1, c2, 2, {1, 1, 3, 3}}, false, rng);
  down1_norm_ = NormLayer(c2);
  down2_ = ConvLayer({4, 8, c2, c3, 2, {1, 1, 3, 3}}, false, rng);
  down2_norm_ = NormLayer(c3);
  for (std::size_t i = 0; i < kResidualBlocks; ++i) {
    Residual r;
    r.conv_a = ConvLayer({3, 3, c3, c3, 1, Padding::uniform(1)}, false, rng);
    r.norm_a = NormLayer(c3);
    r.conv_b = ConvLayer({3, 3, c3, c3, 1, Padding::uniform(1)}, false, rng);
    r.norm_b = NormLayer(c3);
    res_.push_back(std::move(r));
  }
  up1_ = ConvLayer({4, 4, c3, c2, 2, Padding::uniform(1)}, true, rng);
  up1_norm_ = NormLayer(c2);
  up2_ = ConvLayer({4, 4, c2, c1, 2, Padding::uniform(1)}, true, rng);
  up2_norm_ = NormLayer(c1);
  out_conv_ = ConvLayer({7, 7, c1, 1, 1, Padding::uniform(3)}, false, rng);
}

Tensor GeneratorNet::residual_block(std::size_t index, const Tensor& x) const {
  require(index < res_.size(), "residual block index out of range");
  const auto& r = res_[index];
  auto h = nd::relu(r.norm_a(r.conv_a(x)));
  return nd::add(x, r.norm_b(r.conv_b(h)));
}

Tensor GeneratorNet::forward(const Tensor& x) const {
  require(x.rank() == 4 && x.dim(1) == 1, "generator input must be [B,1,H,W], got " + nd::shape_str(x.shape()));
  require(x.dim(2) % 4 == 0, "generator input height " + std::to_string(x.dim(2)) + " is not divisible by 4");
  require(x.dim(3) % 4 == 0, "generator input width " + std::to_string(x.dim(3)) + " is not divisible by 4");
  auto h = nd::relu(in_norm_(in_conv_(x)));
  h = nd::relu(down1_norm_(down1_(h)));
  h = nd::relu(down2_norm_(down2_(h)));
  for (std::size_t i = 0; i < res_.size(); ++i) h = residual_block(i, h);
  h = nd::relu(up1_norm_(up1_(h)));
  h = nd::relu(up2_norm_(up2_(h)));
  return out_conv_(h);
}

namespace {

void push_conv(std::vector<nd::NamedTensor>& out, const std::string& name, const ConvLayer& c) {
  out.push_back({name + ".weight", c.weight});
  out.push_back({name + ".bias", c.bias});
}

void push_norm(std::vector<nd::NamedTensor>& out, const std::string& name, const NormLayer& n) {
  out.push_back({name + ".scale", n.scale});
  out.push_back({name + ".shift", n.shift});
}

std::vector<Tensor> tensors_of(const std::vector<nd::NamedTensor>& named) {
  std::vector<Tensor> out;
  for (const auto& n : named) out.push_back(n.tensor);
  return out;
}

}  // namespace

std::vector<nd::NamedTensor> GeneratorNet::parameters(const std::string& prefix) const {
  std::vector<nd::NamedTensor> out;
  push_conv(out, prefix + "/in_conv", in_conv_);
  push_norm(out, prefix + "/in_norm", in_norm_);
  push_conv(out, prefix + "/down1", down1_);
  push_norm(out, prefix + "/down1_norm", down1_norm_);
  push_conv(out, prefix + "/down2", down2_);
  push_norm(out, prefix + "/down2_norm", down2_norm_);
  for (std::size_t i = 0; i < res_.size(); ++i) {
    const std::string p = prefix + "/res" + std::to_string(i);
    push_conv(out, p + ".conv_a", res_[i].conv_a);
    push_norm(out, p + ".norm_a", res_[i].norm_a);
    push_conv(out, p + ".conv_b", res_[i].conv_b);
    push_norm(out, p + ".norm_b", res_[i].norm_b);
  }
  push_conv(out, prefix + "/up1", up1_);
  push_norm(out, prefix + "/up1_norm", up1_norm_);
  push_conv(out, prefix + "/up2", up2_);
  push_norm(out, prefix + "/up2_norm", up2_norm_);
  push_conv(out, prefix + "/out_conv", out_conv_);
  return out;
}

std::vector<Tensor> GeneratorNet::parameter_tensors() const { return tensors_of(parameters("g")); }

void GeneratorNet::zero_residual_branches() {
  for (auto& r : res_) {
    for (Tensor t : {r.conv_b.weight, r.conv_b.bias, r.norm_b.scale, r.norm_b.shift})
      std::fill(t.mutable_data().begin(), t.mutable_data().end(), 0.0);
  }
}

DiscriminatorNet::DiscriminatorNet(double rho, std::size_t height, std::size_t width, std::uint64_t seed)
    : height_(height), width_(width) {
  require(height >= 1 && width >= 1, "discriminator input extents must be positive");
  std::mt19937_64 rng(seed);
  // Padding (1,2) realises ceil(n/2) for every stride-2 stage.
  const Padding pad{1, 2, 1, 2};
  std::size_t cin = 1, cout = scaled_width(64, rho), h = height, w = width;
  for (int stage = 0; stage < 5; ++stage) {
    ConvSpec s{4, 4, cin, cout, 2, pad};
    h = s.conv_out_h(h);
    w = s.conv_out_w(w);
    body_.emplace_back(s, false, rng);
    cin = cout;
    cout *= 2;
  }
  head_h_ = h;
  head_w_ = w;
  head_ = ConvLayer({h, w, cin, 1, 1, {}}, false, rng);
}

Tensor DiscriminatorNet::logits(const Tensor& x) const {
  require(x.rank() == 4 && x.dim(1) == 1 && x.dim(2) == height_ && x.dim(3) == width_,
          "discriminator expects [B,1," + std::to_string(height_) + "," + std::to_string(width_) + "], got " +
              nd::shape_str(x.shape()));
  Tensor h = x;
  for (const auto& layer : body_) h = nd::leaky_relu(layer(h), kLeakySlope);
  return nd::reshape(head_(h), {x.dim(0)});
}

Tensor DiscriminatorNet::forward(const Tensor& x) const { return nd::sigmoid(logits(x)); }

std::vector<nd::NamedTensor> DiscriminatorNet::parameters(const std::string& prefix) const {
  std::vector<nd::NamedTensor> out;
  for (std::size_t i = 0; i < body_.size(); ++i) push_conv(out, prefix + "/conv" + std::to_string(i), body_[i]);
  push_conv(out, prefix + "/head", head_);
  return out;
}

std::vector<Tensor> DiscriminatorNet::parameter_tensors() const { return tensors_of(parameters("d")); }

void assign_parameters(const std::vector<nd::NamedTensor>& dst, const std::vector<nd::NamedTensor>& src) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& s : src) by_name[s.name] = &s.tensor;
  for (const auto& d : dst) {
    auto it = by_name.find(d.name);
    if (it == by_name.end()) fail(ErrorCode::configuration, "missing parameter '" + d.name + "'");
    if (it->second->shape() != d.tensor.shape())
      fail(ErrorCode::configuration, "parameter '" + d.name + "' has shape " + nd::shape_str(it->second->shape()) +
                                         ", expected " + nd::shape_str(d.tensor.shape()));
    Tensor t = d.tensor;
    std::copy(it->second->data().begin(), it->second->data().end(), t.mutable_data().begin());
  }
}

}  // namespace emovc::model
