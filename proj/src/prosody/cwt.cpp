// SPDX-License-Identifier: Apache-2.0
#include "emovc/prosody/cwt.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <iomanip>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>

#include "emovc/dsp/fft.hpp"
#include "emovc/error.hpp"

namespace emovc::prosody {

namespace {

double mexican_hat(double x) { return (1.0 - x * x) * std::exp(-0.5 * x * x); }

std::ptrdiff_t half_support(double scale) { return static_cast<std::ptrdiff_t>(std::ceil(5.0 * scale)); }

// Energy-normalised kernel s^(-1/2) psi(n/s), n in [-half, half].
double kernel(double scale, std::ptrdiff_t n) { return mexican_hat(static_cast<double>(n) / scale) / std::sqrt(scale); }

double reconstruction_weight(std::size_t i) { return std::pow(static_cast<double>(i) + 2.5, -2.5); }

// Reflection without edge repetition, folded as often as needed.
std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * n - 2);
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  return static_cast<std::size_t>(m < static_cast<std::ptrdiff_t>(n) ? m : period - m);
}

// Gain that makes the weighted-sum inverse unity (geometric mean) for
// periodic components between 8 and 256 frames.
double calibration_gain() {
  static const double gain = [] {
    const auto scales = cwt_scales();
    double log_sum = 0.0;
    const int points = 33;
    for (int p = 0; p < points; ++p) {
      const double period = 8.0 * std::pow(32.0, p / (points - 1.0));
      const double omega = 2.0 * std::numbers::pi / period;
      double g = 0.0;
      for (std::size_t i = 0; i < kScales; ++i) {
        double r = 0.0;
        for (std::ptrdiff_t n = -half_support(scales[i]); n <= half_support(scales[i]); ++n)
          r += kernel(scales[i], n) * std::cos(omega * static_cast<double>(n));
        g += reconstruction_weight(i) * r;
      }
      log_sum += std::log(g);
    }
    return std::exp(-log_sum / points);
  }();
  return gain;
}

struct KernelBank {
  std::unique_ptr<dsp::RealFft> fft;
  std::vector<std::vector<std::complex<double>>> spectra;
};

const KernelBank& kernel_bank(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<KernelBank>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) {
    auto bank = std::make_unique<KernelBank>();
    bank->fft = std::make_unique<dsp::RealFft>(n);
    std::vector<double> buf(n);
    for (double s : cwt_scales()) {
      std::fill(buf.begin(), buf.end(), 0.0);
      for (std::ptrdiff_t k = -half_support(s); k <= half_support(s); ++k)
        buf[static_cast<std::size_t>((k + static_cast<std::ptrdiff_t>(n)) % static_cast<std::ptrdiff_t>(n))] = kernel(s, k);
      std::vector<std::complex<double>> spec(bank->fft->bins());
      bank->fft->forward(buf, spec);
      bank->spectra.push_back(std::move(spec));
    }
    slot = std::move(bank);
  }
  return *slot;
}

}  // namespace

std::vector<double> cwt_scales() {
  std::vector<double> s(kScales);
  for (std::size_t i = 0; i < kScales; ++i) s[i] = kBaseScale * std::pow(2.0, static_cast<double>(i));
  return s;
}

ProsodyTrack interpolate_unvoiced(const ProsodyTrack& track) {
  const std::size_t n = track.values.size();
  require(track.mask.size() == n, "interpolate_unvoiced: mask and values differ in length");
  std::vector<std::size_t> valid;
  for (std::size_t t = 0; t < n; ++t)
    if (track.mask[t]) valid.push_back(t);
  if (valid.empty()) fail(ErrorCode::insufficient_input, "interpolate_unvoiced: track has no valid frames");
  ProsodyTrack out = track;
  for (std::size_t t = 0; t < valid.front(); ++t) out.values[t] = track.values[valid.front()];
  for (std::size_t t = valid.back() + 1; t < n; ++t) out.values[t] = track.values[valid.back()];
  for (std::size_t j = 0; j + 1 < valid.size(); ++j) {
    const std::size_t a = valid[j], b = valid[j + 1];
    for (std::size_t t = a + 1; t < b; ++t) {
      const double f = static_cast<double>(t - a) / static_cast<double>(b - a);
      out.values[t] = track.values[a] + f * (track.values[b] - track.values[a]);
    }
  }
  return out;
}

NormStats compute_norm_stats(const std::vector<double>& values) {
  require(!values.empty(), "compute_norm_stats: empty contour");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  if (!(var > 0.0)) fail(ErrorCode::degenerate, "contour has zero variance; cannot standardise");
  return {mean, std::sqrt(var)};
}

std::vector<double> normalize(const std::vector<double>& values, const NormStats& s) {
  if (!(s.std > 0.0)) fail(ErrorCode::degenerate, "normalize: standard deviation must be positive");
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - s.mean) / s.std;
  return out;
}

std::vector<double> denormalize(const std::vector<double>& values, const NormStats& s) {
  if (!(s.std > 0.0)) fail(ErrorCode::degenerate, "denormalize: standard deviation must be positive");
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] * s.std + s.mean;
  return out;
}

Matrix cwt_transform(const std::vector<double>& values) {
  const std::size_t t_len = values.size();
  require(t_len >= 1, "cwt_transform: empty contour");
  for (double v : values) require(std::isfinite(v), "cwt_transform: non-finite contour value");
  const auto scales = cwt_scales();
  const std::ptrdiff_t pad = half_support(scales.back());
  const std::size_t padded = t_len + 2 * static_cast<std::size_t>(pad);
  std::size_t n = 1;
  while (n < padded) n <<= 1;
  const auto& bank = kernel_bank(n);

  std::vector<double> buf(n, 0.0);
  for (std::size_t i = 0; i < padded; ++i)
    buf[i] = values[reflect(static_cast<std::ptrdiff_t>(i) - pad, t_len)];
  std::vector<std::complex<double>> x(bank.fft->bins()), y(bank.fft->bins());
  bank.fft->forward(buf, x);

  Matrix out(kScales, t_len);
  for (std::size_t s = 0; s < kScales; ++s) {
    for (std::size_t k = 0; k < x.size(); ++k) y[k] = x[k] * bank.spectra[s][k];
    bank.fft->inverse(y, buf);
    for (std::size_t t = 0; t < t_len; ++t) out(s, t) = buf[t + static_cast<std::size_t>(pad)] / static_cast<double>(n);
  }
  return out;
}

CwtMatrix cwt_decompose(const ProsodyTrack& track) {
  if (track.values.size() < kMinFrames)
    fail(ErrorCode::insufficient_input, "cwt_decompose: need at least " + std::to_string(kMinFrames) + " frames, got " +
                                            std::to_string(track.values.size()));
  CwtMatrix m;
  m.stats = compute_norm_stats(track.values);
  m.coeffs = cwt_transform(normalize(track.values, m.stats));
  m.scales = cwt_scales();
  return m;
}

ProsodyTrack cwt_reconstruct(const CwtMatrix& m) {
  require(m.coeffs.rows == kScales, "cwt_reconstruct: expected " + std::to_string(kScales) + " scale rows");
  const double gain = calibration_gain();
  std::vector<double> z(m.coeffs.cols, 0.0);
  for (std::size_t s = 0; s < kScales; ++s) {
    const double w = gain * reconstruction_weight(s);
    for (std::size_t t = 0; t < z.size(); ++t) z[t] += w * m.coeffs(s, t);
  }
  ProsodyTrack out;
  out.values = denormalize(z, m.stats);
  out.mask.assign(z.size(), 1);
  out.stats = m.stats;
  return out;
}

void write_cwt_csv(std::ostream& os, const CwtMatrix& m) {
  os << "scale";
  for (std::size_t t = 0; t < m.coeffs.cols; ++t) os << ",t" << t;
  os << '\n' << std::setprecision(17);
  for (std::size_t s = 0; s < m.coeffs.rows; ++s) {
    os << (s < m.scales.size() ? m.scales[s] : 0.0);
    for (double v : m.coeffs.row(s)) os << ',' << v;
    os << '\n';
  }
}

}  // namespace emovc::prosody
