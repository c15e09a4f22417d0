// SPDX-License-Identifier: Apache-2.0
#include "emovc/ndgrad/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "emovc/error.hpp"

namespace emovc::nd {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

struct Geometry {
  std::size_t channels, in_h, in_w, kh, kw, stride, pad_top, pad_left, out_h, out_w;
  std::size_t rows() const { return channels * kh * kw; }
  std::size_t cols() const { return out_h * out_w; }
};

// Valid output columns [lo, hi) whose source column ox*s + offset lies inside [0, extent).
inline std::pair<std::ptrdiff_t, std::ptrdiff_t> valid_range(std::ptrdiff_t offset, std::ptrdiff_t stride,
                                                             std::ptrdiff_t extent, std::ptrdiff_t out) {
  std::ptrdiff_t lo = offset >= 0 ? 0 : (-offset + stride - 1) / stride;
  std::ptrdiff_t hi = extent - offset <= 0 ? 0 : (extent - offset + stride - 1) / stride;
  lo = std::min(lo, out);
  hi = std::clamp(hi, lo, out);
  return {lo, hi};
}

// Gathers receptive fields of a [C,Hin,Win] image into a [C*kh*kw, Hout*Wout] matrix.
void im2col(const double* src, const Geometry& g, double* col) {
  const auto ho = static_cast<std::ptrdiff_t>(g.out_h), wo = static_cast<std::ptrdiff_t>(g.out_w);
  const auto hi = static_cast<std::ptrdiff_t>(g.in_h), wi = static_cast<std::ptrdiff_t>(g.in_w);
  const auto s = static_cast<std::ptrdiff_t>(g.stride);
  for (std::size_t c = 0; c < g.channels; ++c) {
    const double* plane = src + c * g.in_h * g.in_w;
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        double* dst = col + ((c * g.kh + i) * g.kw + j) * g.cols();
        const auto di = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(g.pad_top);
        const auto dj = static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(g.pad_left);
        const auto [lo, hi_x] = valid_range(dj, s, wi, wo);
        for (std::ptrdiff_t oy = 0; oy < ho; ++oy) {
          const std::ptrdiff_t y = oy * s + di;
          double* row = dst + oy * wo;
          if (y < 0 || y >= hi) {
            std::fill(row, row + wo, 0.0);
            continue;
          }
          const double* srow = plane + y * wi + dj;
          std::fill(row, row + lo, 0.0);
          if (s == 1) {
            std::copy(srow + lo, srow + hi_x, row + lo);
          } else {
            for (std::ptrdiff_t ox = lo; ox < hi_x; ++ox) row[ox] = srow[ox * s];
          }
          std::fill(row + hi_x, row + wo, 0.0);
        }
      }
    }
  }
}

// Adjoint of im2col: scatters-and-adds a column matrix back onto the image.
void col2im(const double* col, const Geometry& g, double* dst) {
  const auto ho = static_cast<std::ptrdiff_t>(g.out_h), wo = static_cast<std::ptrdiff_t>(g.out_w);
  const auto hi = static_cast<std::ptrdiff_t>(g.in_h), wi = static_cast<std::ptrdiff_t>(g.in_w);
  const auto s = static_cast<std::ptrdiff_t>(g.stride);
  for (std::size_t c = 0; c < g.channels; ++c) {
    double* plane = dst + c * g.in_h * g.in_w;
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        const double* src = col + ((c * g.kh + i) * g.kw + j) * g.cols();
        const auto di = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(g.pad_top);
        const auto dj = static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(g.pad_left);
        const auto [lo, hi_x] = valid_range(dj, s, wi, wo);
        for (std::ptrdiff_t oy = 0; oy < ho; ++oy) {
          const std::ptrdiff_t y = oy * s + di;
          if (y < 0 || y >= hi) continue;
          double* drow = plane + y * wi + dj;
          const double* row = src + oy * wo;
          if (s == 1) {
            for (std::ptrdiff_t ox = lo; ox < hi_x; ++ox) drow[ox] += row[ox];
          } else {
            for (std::ptrdiff_t ox = lo; ox < hi_x; ++ox) drow[ox * s] += row[ox];
          }
        }
      }
    }
  }
}

// Direct stride-1 kernels for layers with very few output channels, where the
// im2col matrix would dwarf the arithmetic. `fn(w_index, y, dj, lo, hi, row_offset)` style
// loops are spelled out per use to keep the inner loops vectorisable.
template <typename RowOp>
void for_each_tap(const Geometry& g, std::size_t cout, RowOp op) {
  const auto ho = static_cast<std::ptrdiff_t>(g.out_h), wo = static_cast<std::ptrdiff_t>(g.out_w);
  const auto hi = static_cast<std::ptrdiff_t>(g.in_h), wi = static_cast<std::ptrdiff_t>(g.in_w);
  for (std::size_t co = 0; co < cout; ++co)
    for (std::size_t c = 0; c < g.channels; ++c)
      for (std::size_t i = 0; i < g.kh; ++i)
        for (std::size_t j = 0; j < g.kw; ++j) {
          const auto di = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(g.pad_top);
          const auto dj = static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(g.pad_left);
          const auto [lo, hi_x] = valid_range(dj, 1, wi, wo);
          if (lo >= hi_x) continue;
          const std::size_t widx = ((co * g.channels + c) * g.kh + i) * g.kw + j;
          for (std::ptrdiff_t oy = 0; oy < ho; ++oy) {
            const std::ptrdiff_t y = oy + di;
            if (y < 0 || y >= hi) continue;
            const std::size_t src_off = c * g.in_h * g.in_w + static_cast<std::size_t>(y * wi + dj);
            const std::size_t dst_off = co * g.out_h * g.out_w + static_cast<std::size_t>(oy * wo);
            op(widx, src_off, dst_off, lo, hi_x);
          }
        }
}

void direct_forward(const double* src, const double* w, const Geometry& g, std::size_t cout, double* out) {
  for_each_tap(g, cout, [&](std::size_t widx, std::size_t so, std::size_t d, std::ptrdiff_t lo, std::ptrdiff_t hi) {
    const double wv = w[widx];
    const double* s = src + so;
    double* o = out + d;
    for (std::ptrdiff_t x = lo; x < hi; ++x) o[x] += wv * s[x];
  });
}

void direct_backward(const double* src, const double* w, const double* dy, const Geometry& g, std::size_t cout,
                     double* dsrc, double* dw) {
  for_each_tap(g, cout, [&](std::size_t widx, std::size_t so, std::size_t d, std::ptrdiff_t lo, std::ptrdiff_t hi) {
    const double* gy = dy + d;
    if (dw) {
      const double* s = src + so;
      double acc = 0.0;
      for (std::ptrdiff_t x = lo; x < hi; ++x) acc += gy[x] * s[x];
      dw[widx] += acc;
    }
    if (dsrc) {
      const double wv = w[widx];
      double* ds = dsrc + so;
      for (std::ptrdiff_t x = lo; x < hi; ++x) ds[x] += wv * gy[x];
    }
  });
}

void check_finite(const Tensor& t, const char* what) {
  for (double v : t.data())
    if (!std::isfinite(v)) fail(ErrorCode::non_finite, std::string(what) + ": non-finite input value");
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape())
    fail(ErrorCode::contract_violation,
         std::string(what) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

void check_conv_operands(const Tensor& input, const ConvSpec& spec, const Tensor& weight, const Tensor& bias,
                         bool transposed, const char* op) {
  spec.validate();
  const auto bad = [&](const std::string& why) { fail(ErrorCode::contract_violation, std::string(op) + ": " + why); };
  if (input.rank() != 4) bad("input must be [B,C,H,W], got " + shape_str(input.shape()));
  if (input.dim(1) != spec.in_channels)
    bad("channel dimension is " + std::to_string(input.dim(1)) + ", spec expects " + std::to_string(spec.in_channels));
  if (weight.shape() != spec.weight_shape(transposed))
    bad("weight shape " + shape_str(weight.shape()) + " does not match " + shape_str(spec.weight_shape(transposed)));
  if (bias.defined() && bias.shape() != Shape{spec.out_channels})
    bad("bias shape " + shape_str(bias.shape()) + " does not match out_channels");
}

inline double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

}  // namespace

void ConvSpec::validate() const {
  require(kernel_h >= 1, "ConvSpec: kernel_h must be >= 1");
  require(kernel_w >= 1, "ConvSpec: kernel_w must be >= 1");
  require(in_channels >= 1, "ConvSpec: in_channels must be >= 1");
  require(out_channels >= 1, "ConvSpec: out_channels must be >= 1");
  require(stride >= 1, "ConvSpec: stride must be >= 1");
}

Shape ConvSpec::weight_shape(bool transposed) const {
  return transposed ? Shape{in_channels, out_channels, kernel_h, kernel_w}
                    : Shape{out_channels, in_channels, kernel_h, kernel_w};
}

std::size_t ConvSpec::conv_out_h(std::size_t h) const {
  const std::size_t padded = h + padding.top + padding.bottom;
  require(padded >= kernel_h, "conv2d: padded height " + std::to_string(padded) + " smaller than kernel height " +
                                  std::to_string(kernel_h));
  return (padded - kernel_h) / stride + 1;
}

std::size_t ConvSpec::conv_out_w(std::size_t w) const {
  const std::size_t padded = w + padding.left + padding.right;
  require(padded >= kernel_w, "conv2d: padded width " + std::to_string(padded) + " smaller than kernel width " +
                                  std::to_string(kernel_w));
  return (padded - kernel_w) / stride + 1;
}

std::size_t ConvSpec::transpose_out_h(std::size_t h) const {
  const std::size_t full = (h - 1) * stride + kernel_h;
  require(full > padding.top + padding.bottom, "conv_transpose2d: padding removes the whole height");
  return full - padding.top - padding.bottom;
}

std::size_t ConvSpec::transpose_out_w(std::size_t w) const {
  const std::size_t full = (w - 1) * stride + kernel_w;
  require(full > padding.left + padding.right, "conv_transpose2d: padding removes the whole width");
  return full - padding.left - padding.right;
}

Tensor conv2d(const Tensor& input, const ConvSpec& spec, const Tensor& weight, const Tensor& bias) {
  check_conv_operands(input, spec, weight, bias, false, "conv2d");
  const std::size_t batch = input.dim(0), h = input.dim(2), w = input.dim(3);
  const Geometry g{spec.in_channels, h, w, spec.kernel_h, spec.kernel_w, spec.stride,
                   spec.padding.top, spec.padding.left, spec.conv_out_h(h), spec.conv_out_w(w)};
  const std::size_t cout = spec.out_channels, k = g.rows(), n = g.cols();
  const std::size_t in_stride = spec.in_channels * h * w, out_stride = cout * n;

  const bool direct = spec.stride == 1 && cout <= 4;
  std::vector<double> out(batch * out_stride, 0.0);
  if (direct) {
    for (std::size_t b = 0; b < batch; ++b) {
      double* ob = out.data() + b * out_stride;
      direct_forward(input.data().data() + b * in_stride, weight.data().data(), g, cout, ob);
      if (bias.defined())
        for (std::size_t c = 0; c < cout; ++c)
          for (std::size_t i = 0; i < n; ++i) ob[c * n + i] += bias.data()[c];
    }
  }
  std::vector<double> col(direct ? 0 : k * n);
  ConstMatMap wmat(weight.data().data(), cout, k);
  for (std::size_t b = 0; b < batch && !direct; ++b) {
    im2col(input.data().data() + b * in_stride, g, col.data());
    MatMap o(out.data() + b * out_stride, cout, n);
    o.noalias() = wmat * ConstMatMap(col.data(), k, n);
    if (bias.defined())
      for (std::size_t c = 0; c < cout; ++c) o.row(c).array() += bias.data()[c];
  }

  return make_result(
      {batch, cout, g.out_h, g.out_w}, std::move(out), {input, weight, bias},
      [input, weight, bias, g, batch, cout, k, n, in_stride, out_stride, direct](const TensorData& o) {
        if (direct) {
          for (std::size_t b = 0; b < batch; ++b) {
            const double* dy = o.grad.data() + b * out_stride;
            direct_backward(input.data().data() + b * in_stride, weight.data().data(), dy, g, cout,
                            input.requires_grad() ? input.impl()->grad.data() + b * in_stride : nullptr,
                            weight.requires_grad() ? weight.impl()->grad.data() : nullptr);
            if (bias.defined() && bias.requires_grad())
              for (std::size_t c = 0; c < cout; ++c)
                for (std::size_t i = 0; i < n; ++i) bias.impl()->grad[c] += dy[c * n + i];
          }
          return;
        }
        std::vector<double> col(k * n);
        ConstMatMap wmat(weight.data().data(), cout, k);
        for (std::size_t b = 0; b < batch; ++b) {
          ConstMatMap dy(o.grad.data() + b * out_stride, cout, n);
          if (weight.requires_grad()) {
            im2col(input.data().data() + b * in_stride, g, col.data());
            MatMap dw(weight.impl()->grad.data(), cout, k);
            dw.noalias() += dy * ConstMatMap(col.data(), k, n).transpose();
          }
          if (bias.defined() && bias.requires_grad()) {
            auto& db = bias.impl()->grad;
            // Plain loop: Eigen's vectorised sum peels by address, which breaks bitwise determinism.
            const double* d = o.grad.data() + b * out_stride;
            for (std::size_t c = 0; c < cout; ++c) {
              double acc = 0.0;
              for (std::size_t j = 0; j < n; ++j) acc += d[c * n + j];
              db[c] += acc;
            }
          }
          if (input.requires_grad()) {
            MatMap dcol(col.data(), k, n);
            dcol.noalias() = wmat.transpose() * dy;
            col2im(col.data(), g, input.impl()->grad.data() + b * in_stride);
          }
        }
      });
}

Tensor conv_transpose2d(const Tensor& input, const ConvSpec& spec, const Tensor& weight, const Tensor& bias) {
  check_conv_operands(input, spec, weight, bias, true, "conv_transpose2d");
  const std::size_t batch = input.dim(0), h = input.dim(2), w = input.dim(3);
  const std::size_t cin = spec.in_channels, cout = spec.out_channels;
  // The output image plays the role of a conv2d input whose conv output is the layer input.
  const Geometry g{cout, spec.transpose_out_h(h), spec.transpose_out_w(w), spec.kernel_h, spec.kernel_w,
                   spec.stride, spec.padding.top, spec.padding.left, h, w};
  const std::size_t k = g.rows(), n = g.cols();
  const std::size_t in_stride = cin * n, out_stride = cout * g.in_h * g.in_w;

  std::vector<double> out(batch * out_stride, 0.0);
  std::vector<double> col(k * n);
  ConstMatMap wmat(weight.data().data(), cin, k);
  for (std::size_t b = 0; b < batch; ++b) {
    MatMap c(col.data(), k, n);
    c.noalias() = wmat.transpose() * ConstMatMap(input.data().data() + b * in_stride, cin, n);
    double* ob = out.data() + b * out_stride;
    col2im(col.data(), g, ob);
    if (bias.defined())
      for (std::size_t ch = 0; ch < cout; ++ch) {
        double* plane = ob + ch * g.in_h * g.in_w;
        for (std::size_t i = 0; i < g.in_h * g.in_w; ++i) plane[i] += bias.data()[ch];
      }
  }

  return make_result(
      {batch, cout, g.in_h, g.in_w}, std::move(out), {input, weight, bias},
      [input, weight, bias, g, batch, cin, cout, k, n, in_stride, out_stride](const TensorData& o) {
        std::vector<double> col(k * n);
        ConstMatMap wmat(weight.data().data(), cin, k);
        for (std::size_t b = 0; b < batch; ++b) {
          const double* dy = o.grad.data() + b * out_stride;
          im2col(dy, g, col.data());
          ConstMatMap dcol(col.data(), k, n);
          if (input.requires_grad()) {
            MatMap dx(input.impl()->grad.data() + b * in_stride, cin, n);
            dx.noalias() += wmat * dcol;
          }
          if (weight.requires_grad()) {
            MatMap dw(weight.impl()->grad.data(), cin, k);
            dw.noalias() += ConstMatMap(input.data().data() + b * in_stride, cin, n) * dcol.transpose();
          }
          if (bias.defined() && bias.requires_grad()) {
            auto& db = bias.impl()->grad;
            const std::size_t plane = g.in_h * g.in_w;
            for (std::size_t ch = 0; ch < cout; ++ch) {
              double s = 0.0;
              for (std::size_t i = 0; i < plane; ++i) s += dy[ch * plane + i];
              db[ch] += s;
            }
          }
        }
      });
}

Tensor instance_norm(const Tensor& input, const Tensor& scale, const Tensor& shift, double eps) {
  if (input.rank() != 4)
    fail(ErrorCode::contract_violation, "instance_norm: input must be [B,C,H,W], got " + shape_str(input.shape()));
  const std::size_t batch = input.dim(0), channels = input.dim(1), n = input.dim(2) * input.dim(3);
  if (n < 2) fail(ErrorCode::degenerate, "instance_norm: slice of a single element has no usable variance");
  require(scale.shape() == Shape{channels}, "instance_norm: scale must have shape [C]");
  require(shift.shape() == Shape{channels}, "instance_norm: shift must have shape [C]");
  require(eps >= 0.0, "instance_norm: eps must be non-negative");

  std::vector<double> out(input.size()), xhat(input.size()), inv_std(batch * channels);
  const double* x = input.data().data();
  for (std::size_t s = 0; s < batch * channels; ++s) {
    const double* xs = x + s * n;
    double mu = 0.0;
    for (std::size_t i = 0; i < n; ++i) mu += xs[i];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (xs[i] - mu) * (xs[i] - mu);
    var /= static_cast<double>(n);
    // Constant slices normalise to zero rather than 0/0 when eps is zero.
    const double inv = var + eps > 0.0 ? 1.0 / std::sqrt(var + eps) : 0.0;
    inv_std[s] = inv;
    const double gamma = scale.data()[s % channels], beta = shift.data()[s % channels];
    for (std::size_t i = 0; i < n; ++i) {
      const double xh = (xs[i] - mu) * inv;
      xhat[s * n + i] = xh;
      out[s * n + i] = gamma * xh + beta;
    }
  }

  return make_result(input.shape(), std::move(out), {input, scale, shift},
                     [input, scale, shift, xhat = std::move(xhat), inv_std = std::move(inv_std), batch, channels,
                      n](const TensorData& o) {
                       const double dn = static_cast<double>(n);
                       for (std::size_t s = 0; s < batch * channels; ++s) {
                         const std::size_t c = s % channels;
                         const double* dy = o.grad.data() + s * n;
                         const double* xh = xhat.data() + s * n;
                         double sum_dy = 0.0, sum_dy_xh = 0.0;
                         for (std::size_t i = 0; i < n; ++i) {
                           sum_dy += dy[i];
                           sum_dy_xh += dy[i] * xh[i];
                         }
                         if (scale.requires_grad()) scale.impl()->grad[c] += sum_dy_xh;
                         if (shift.requires_grad()) shift.impl()->grad[c] += sum_dy;
                         if (input.requires_grad()) {
                           const double gamma = scale.data()[c];
                           const double k = gamma * inv_std[s] / dn;
                           double* dx = input.impl()->grad.data() + s * n;
                           for (std::size_t i = 0; i < n; ++i)
                             dx[i] += k * (dn * dy[i] - sum_dy - xh[i] * sum_dy_xh);
                         }
                       }
                     });
}

namespace {

// Elementwise unary op with derivative expressed through input and output values.
template <typename F, typename D>
Tensor unary(const Tensor& x, F f, D df) {
  std::vector<double> out(x.size());
  const auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return make_result(x.shape(), std::move(out), {x}, [x, df](const TensorData& o) {
    if (!x.requires_grad()) return;
    auto& g = x.impl()->grad;
    const auto in = x.data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * df(in[i], o.value[i]);
  });
}

}  // namespace

// Subgradient at exactly zero is taken as 1 for the ReLU family.
Tensor relu(const Tensor& x) {
  return unary(x, [](double v) { return v >= 0.0 ? v : 0.0; },
               [](double v, double) { return v >= 0.0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(const Tensor& x, double alpha) {
  require(alpha > 0.0 && alpha < 1.0, "leaky_relu: alpha must lie in (0,1)");
  return unary(x, [alpha](double v) { return v >= 0.0 ? v : alpha * v; },
               [alpha](double v, double) { return v >= 0.0 ? 1.0 : alpha; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor activate(const Tensor& x, Activation kind, double alpha) {
  switch (kind) {
    case Activation::relu: return relu(x);
    case Activation::leaky_relu: return leaky_relu(x, alpha);
    case Activation::sigmoid: return sigmoid(x);
  }
  fail(ErrorCode::contract_violation, "unknown activation");
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return make_result(a.shape(), std::move(out), {a, b}, [a, b](const TensorData& o) {
    for (const Tensor* t : {&a, &b})
      if (t->requires_grad()) {
        auto& g = t->impl()->grad;
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
      }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) { return add(a, scale(b, -1.0)); }

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return make_result(a.shape(), std::move(out), {a, b}, [a, b](const TensorData& o) {
    if (a.requires_grad()) {
      auto& g = a.impl()->grad;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * b.data()[i];
    }
    if (b.requires_grad()) {
      auto& g = b.impl()->grad;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * a.data()[i];
    }
  });
}

Tensor scale(const Tensor& a, double s) {
  return unary(a, [s](double v) { return s * v; }, [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& a, double s) {
  return unary(a, [s](double v) { return v + s; }, [](double, double) { return 1.0; });
}

Tensor square(const Tensor& a) {
  return unary(a, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return make_result({1}, {s}, {a}, [a](const TensorData& o) {
    if (!a.requires_grad()) return;
    for (auto& g : a.impl()->grad) g += o.grad[0];
  });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

Tensor reshape(const Tensor& a, const Shape& shape) {
  if (numel(shape) != a.size())
    fail(ErrorCode::contract_violation, "reshape: " + shape_str(a.shape()) + " cannot become " + shape_str(shape));
  std::vector<double> out(a.data().begin(), a.data().end());
  return make_result(shape, std::move(out), {a}, [a](const TensorData& o) {
    if (!a.requires_grad()) return;
    auto& g = a.impl()->grad;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
  });
}

Tensor slice_batch(const Tensor& a, std::size_t begin, std::size_t end) {
  require(a.rank() >= 1 && begin < end && end <= a.dim(0),
          "slice_batch: range [" + std::to_string(begin) + "," + std::to_string(end) + ") invalid for " +
              shape_str(a.shape()));
  const std::size_t item = a.size() / a.dim(0);
  Shape shape = a.shape();
  shape[0] = end - begin;
  std::vector<double> out(a.data().begin() + static_cast<std::ptrdiff_t>(begin * item),
                          a.data().begin() + static_cast<std::ptrdiff_t>(end * item));
  return make_result(shape, std::move(out), {a}, [a, offset = begin * item](const TensorData& o) {
    if (!a.requires_grad()) return;
    auto& g = a.impl()->grad;
    for (std::size_t i = 0; i < o.grad.size(); ++i) g[offset + i] += o.grad[i];
  });
}

Tensor concat_batch(const std::vector<Tensor>& parts) {
  require(!parts.empty(), "concat_batch: no inputs");
  Shape shape = parts.front().shape();
  std::size_t total = 0;
  for (const auto& p : parts) {
    require(p.rank() == shape.size() && std::equal(shape.begin() + 1, shape.end(), p.shape().begin() + 1),
            "concat_batch: incompatible shape " + shape_str(p.shape()));
    total += p.dim(0);
  }
  shape[0] = total;
  std::vector<double> out;
  out.reserve(numel(shape));
  for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  return make_result(shape, std::move(out), parts, [parts](const TensorData& o) {
    std::size_t offset = 0;
    for (const auto& p : parts) {
      if (p.requires_grad()) {
        auto& g = p.impl()->grad;
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[offset + i];
      }
      offset += p.size();
    }
  });
}

Tensor l1_loss(const Tensor& pred, const Tensor& target) {
  check_same_shape(pred, target, "l1_loss");
  check_finite(pred, "l1_loss");
  check_finite(target, "l1_loss");
  const double n = static_cast<double>(pred.size());
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred.data()[i] - target.data()[i]);
  return make_result({1}, {s / n}, {pred, target}, [pred, target, n](const TensorData& o) {
    const double g0 = o.grad[0] / n;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double d = pred.data()[i] - target.data()[i];
      const double sg = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
      if (pred.requires_grad()) pred.impl()->grad[i] += g0 * sg;
      if (target.requires_grad()) target.impl()->grad[i] -= g0 * sg;
    }
  });
}

Tensor bce_loss(const Tensor& pred, const Tensor& target) {
  check_same_shape(pred, target, "bce_loss");
  check_finite(pred, "bce_loss");
  check_finite(target, "bce_loss");
  const double n = static_cast<double>(pred.size());
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = clamp_prob(pred.data()[i]), t = target.data()[i];
    s -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
  }
  return make_result({1}, {s / n}, {pred, target}, [pred, target, n](const TensorData& o) {
    const double g0 = o.grad[0] / n;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double raw = pred.data()[i], t = target.data()[i];
      const double p = clamp_prob(raw);
      if (pred.requires_grad() && p == raw) pred.impl()->grad[i] += g0 * (p - t) / (p * (1.0 - p));
      if (target.requires_grad()) target.impl()->grad[i] += g0 * (std::log(1.0 - p) - std::log(p));
    }
  });
}

Tensor gan_log(const Tensor& p) {
  check_finite(p, "gan_log");
  const double n = static_cast<double>(p.size());
  double s = 0.0;
  for (double v : p.data()) s += std::log(clamp_prob(v));
  return make_result({1}, {s / n}, {p}, [p, n](const TensorData& o) {
    if (!p.requires_grad()) return;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double raw = p.data()[i], c = clamp_prob(raw);
      if (c == raw) p.impl()->grad[i] += o.grad[0] / (n * c);
    }
  });
}

Tensor gan_log_complement(const Tensor& p) {
  check_finite(p, "gan_log_complement");
  const double n = static_cast<double>(p.size());
  double s = 0.0;
  for (double v : p.data()) s += std::log(1.0 - clamp_prob(v));
  return make_result({1}, {s / n}, {p}, [p, n](const TensorData& o) {
    if (!p.requires_grad()) return;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double raw = p.data()[i], c = clamp_prob(raw);
      if (c == raw) p.impl()->grad[i] -= o.grad[0] / (n * (1.0 - c));
    }
  });
}

Tensor loss(const Tensor& pred, const Tensor& target, LossKind kind) {
  switch (kind) {
    case LossKind::l1: return l1_loss(pred, target);
    case LossKind::bce: return bce_loss(pred, target);
    case LossKind::gan_log: return gan_log(pred);
  }
  fail(ErrorCode::contract_violation, "unknown loss kind");
}

}  // namespace emovc::nd
