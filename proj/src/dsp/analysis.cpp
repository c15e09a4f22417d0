// SPDX-License-Identifier: Apache-2.0
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>

#include "emovc/dsp/features.hpp"
#include "emovc/error.hpp"
#include "emovc/dsp/fft.hpp"

namespace emovc::dsp {

std::size_t AnalysisConfig::window_samples(double fs) const {
  return static_cast<std::size_t>(std::lround(frame_length * fs));
}

std::size_t AnalysisConfig::shift_samples(double fs) const {
  return static_cast<std::size_t>(std::lround(frame_shift * fs));
}

void AnalysisConfig::validate(double fs) const {
  auto bad = [](const std::string& m) { fail(ErrorCode::configuration, "analysis config: " + m); };
  if (!(fs > 0)) bad("sample rate must be positive");
  if (window_samples(fs) < 2) bad("frame length too short");
  if (shift_samples(fs) < 1) bad("frame shift too short");
  if (fft_size < window_samples(fs) || (fft_size & (fft_size - 1)) != 0)
    bad("fft_size must be a power of two no smaller than the window");
  if (!(f0_min > 0 && f0_max > f0_min && f0_max < fs / 4)) bad("need 0 < f0_min < f0_max < fs/4");
  if (!(voicing_threshold > 0 && voicing_threshold < 1)) bad("voicing_threshold must lie in (0,1)");
  if (mcc_order < 1 || mcc_order > fft_size / 2 + 1) bad("mcc_order must lie in [1, fft/2+1]");
  if (!(std::abs(warp) < 1)) bad("warp must satisfy |warp| < 1");
  if (lifter < 2 || lifter >= fft_size / 2) bad("lifter must lie in [2, fft/2)");
  if (!(envelope_floor > 0)) bad("envelope_floor must be positive");
}

std::size_t frame_count(std::size_t length, std::size_t window, std::size_t shift) {
  if (length < window)
    fail(ErrorCode::insufficient_input, "signal of " + std::to_string(length) +
                                            " samples is shorter than one analysis window (" +
                                            std::to_string(window) + ")");
  return (length - window) / shift + 1;
}

void FeatureSet::validate() const {
  const std::size_t t = f0.size();
  require(voicing.size() == t && energy.size() == t && aperiodicity.size() == t && mcc.rows == t,
          "FeatureSet: tracks disagree in frame count");
  for (std::size_t i = 0; i < t; ++i) {
    require((f0[i] > 0) == (voicing[i] != 0), "FeatureSet: f0 > 0 must coincide with voicing at frame " +
                                                  std::to_string(i));
    require(energy[i] >= 0, "FeatureSet: negative energy at frame " + std::to_string(i));
  }
}

namespace {

std::vector<double> hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

// Windowed-sinc low-pass; pitch is tracked on the band below ~1 kHz where
// harmonics are strongest and single-sample pulse jitter is smoothed out.
std::vector<double> lowpass(const std::vector<double>& x, double fs, double cutoff) {
  const auto half = static_cast<std::ptrdiff_t>(std::lround(2.0 * fs / cutoff));
  std::vector<double> h(2 * half + 1);
  double sum = 0.0;
  for (std::ptrdiff_t i = -half; i <= half; ++i) {
    const double fc = cutoff / fs;
    const double sinc = i == 0 ? 2 * fc : std::sin(2 * std::numbers::pi * fc * i) / (std::numbers::pi * i);
    const double win = 0.5 + 0.5 * std::cos(std::numbers::pi * i / (half + 1));
    sum += h[i + half] = sinc * win;
  }
  std::vector<double> y(x.size(), 0.0);
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    double acc = 0.0;
    for (std::ptrdiff_t i = std::max(-half, t - n + 1); i <= std::min(half, t); ++i) acc += h[i + half] * x[t - i];
    y[t] = acc / sum;
  }
  return y;
}

double sample_at(const std::vector<double>& x, std::ptrdiff_t i) {
  return i < 0 || i >= static_cast<std::ptrdiff_t>(x.size()) ? 0.0 : x[static_cast<std::size_t>(i)];
}

// Cosine basis in warped frequency, with its weighted least-squares inverse.
struct WarpedBasis {
  Eigen::MatrixXd synth;     // K x order
  Eigen::MatrixXd analysis;  // order x K
};

const WarpedBasis& warped_basis(std::size_t bins, std::size_t order, double warp) {
  static std::mutex mu;
  static std::map<std::tuple<std::size_t, std::size_t, double>, std::unique_ptr<WarpedBasis>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[{bins, order, warp}];
  if (slot) return *slot;
  require(bins >= order && bins >= 2, "mcc: need at least `order` frequency bins");
  auto b = std::make_unique<WarpedBasis>();
  b->synth.resize(bins, order);
  Eigen::VectorXd sw(bins);
  const double a = warp;
  for (std::size_t k = 0; k < bins; ++k) {
    const double w = std::numbers::pi * k / (bins - 1);
    const double omega = w + 2.0 * std::atan2(a * std::sin(w), 1.0 - a * std::cos(w));
    double weight = (1 - a * a) / (1 - 2 * a * std::cos(w) + a * a);
    if (k == 0 || k + 1 == bins) weight *= 0.5;
    sw[k] = std::sqrt(weight);
    b->synth(k, 0) = 1.0;
    for (std::size_t m = 1; m < order; ++m) b->synth(k, m) = 2.0 * std::cos(m * omega);
  }
  Eigen::MatrixXd weighted = sw.asDiagonal() * b->synth;
  b->analysis = weighted.completeOrthogonalDecomposition().pseudoInverse() * sw.asDiagonal();
  slot = std::move(b);
  return *slot;
}

}  // namespace

Matrix spectral_envelope(const Waveform& w, const AnalysisConfig& cfg, const std::vector<double>& f0) {
  cfg.validate(w.sample_rate);
  const std::size_t win = cfg.window_samples(w.sample_rate), hop = cfg.shift_samples(w.sample_rate);
  const std::size_t frames = frame_count(w.samples.size(), win, hop);
  require(f0.empty() || f0.size() == frames, "spectral_envelope: F0 track length differs from the frame count");
  const std::size_t n = cfg.fft_size, bins = n / 2 + 1;
  const auto window = hann(win);
  double norm = 0.0;
  for (double v : window) norm += v * v;

  // Raised-cosine lifter: flat up to half the cutoff, tapering to zero at it.
  std::vector<double> lifter(bins, 0.0);
  for (std::size_t q = 0; q < cfg.lifter; ++q) {
    const double half = cfg.lifter / 2.0;
    lifter[q] = q <= half ? 1.0 : 0.5 + 0.5 * std::cos(std::numbers::pi * (q - half) / half);
  }

  RealFft fft(n);
  std::vector<double> buf(n), ceps(n);
  std::vector<std::complex<double>> spec(bins);
  std::vector<double> cum(bins + 1);
  Matrix env(frames, bins);
  for (std::size_t t = 0; t < frames; ++t) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (std::size_t i = 0; i < win; ++i) buf[i] = w.samples[t * hop + i] * window[i];
    fft.forward(buf, spec);
    // Box average over one harmonic spacing removes the harmonic ripple, so the
    // envelope follows band power rather than its geometric mean.
    for (std::size_t k = 0; k < bins; ++k) cum[k + 1] = cum[k] + std::norm(spec[k]) / norm;
    const double band = !f0.empty() && f0[t] > 0 ? f0[t] : 100.0;
    const auto half = static_cast<std::ptrdiff_t>(std::lround(0.5 * band * static_cast<double>(n) / w.sample_rate));
    const auto last = static_cast<std::ptrdiff_t>(bins) - 1;
    for (std::ptrdiff_t k = 0; k <= last; ++k) {
      const auto lo = std::max<std::ptrdiff_t>(0, k - half), hi = std::min(last, k + half);
      const double mean = (cum[hi + 1] - cum[lo]) / static_cast<double>(hi - lo + 1);
      spec[k] = std::log(std::max(mean, cfg.envelope_floor));
    }
    fft.inverse(spec, ceps);
    for (std::size_t q = 0; q < n; ++q) {
      const std::size_t dist = std::min(q, n - q);
      ceps[q] *= (dist < bins ? lifter[dist] : 0.0) / static_cast<double>(n);
    }
    fft.forward(ceps, spec);
    for (std::size_t k = 0; k < bins; ++k) env(t, k) = std::max(std::exp(spec[k].real()), cfg.envelope_floor);
  }
  return env;
}

PitchTrack estimate_f0(const Waveform& w, const AnalysisConfig& cfg) {
  cfg.validate(w.sample_rate);
  const double fs = w.sample_rate;
  const std::size_t win = cfg.window_samples(fs), hop = cfg.shift_samples(fs);
  const std::size_t frames = frame_count(w.samples.size(), win, hop);
  const auto lag_min = static_cast<std::size_t>(std::floor(fs / cfg.f0_max));
  const auto lag_max = static_cast<std::size_t>(std::ceil(fs / cfg.f0_min));
  // Long enough to hold two periods of the lowest admissible F0.
  const std::size_t len = std::max(win, 2 * lag_max);

  const auto x = lowpass(w.samples, fs, std::min(1000.0, fs / 4));
  PitchTrack p;
  p.f0.assign(frames, 0.0);
  p.voicing.assign(frames, 0);
  p.periodicity.assign(frames, 0.0);
  std::vector<double> seg(len), r(lag_max + 2, 0.0);
  for (std::size_t t = 0; t < frames; ++t) {
    const auto start = static_cast<std::ptrdiff_t>(t * hop + win / 2) - static_cast<std::ptrdiff_t>(len / 2);
    double mean = 0.0;
    for (std::size_t i = 0; i < len; ++i) mean += seg[i] = sample_at(x, start + static_cast<std::ptrdiff_t>(i));
    mean /= static_cast<double>(len);
    double total = 0.0;
    for (auto& v : seg) {
      v -= mean;
      total += v * v;
    }
    if (total < 1e-12 * static_cast<double>(len)) continue;

    // Prefix sums give the energies of both lagged windows in O(1).
    std::vector<double> cum(len + 1, 0.0);
    for (std::size_t i = 0; i < len; ++i) cum[i + 1] = cum[i] + seg[i] * seg[i];
    std::fill(r.begin(), r.end(), 0.0);
    double best = 0.0;
    for (std::size_t lag = lag_min; lag <= lag_max + 1 && lag < len; ++lag) {
      const std::size_t m = len - lag;
      double cross = 0.0;
      for (std::size_t i = 0; i < m; ++i) cross += seg[i] * seg[i + lag];
      const double e0 = cum[m], e1 = cum[len] - cum[lag];
      r[lag] = e0 > 0 && e1 > 0 ? cross / std::sqrt(e0 * e1) : 0.0;
      if (lag <= lag_max) best = std::max(best, r[lag]);
    }
    p.periodicity[t] = best;
    if (best < cfg.voicing_threshold) continue;

    // Smallest-lag local peak close to the global best avoids octave-down errors.
    std::size_t pick = 0;
    for (std::size_t lag = std::max<std::size_t>(lag_min, 1); lag <= lag_max; ++lag)
      if (r[lag] >= 0.9 * best && r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1]) {
        pick = lag;
        break;
      }
    if (pick == 0) continue;
    double refined = static_cast<double>(pick);
    const double a = r[pick - 1], b = r[pick], c = r[pick + 1];
    const double denom = a - 2.0 * b + c;
    if (pick > lag_min && denom < 0) refined += std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
    p.f0[t] = std::clamp(fs / refined, cfg.f0_min, cfg.f0_max);
    p.voicing[t] = 1;
  }
  return p;
}

Matrix mcc_encode(const Matrix& envelope, std::size_t order, double warp, double floor) {
  require(order >= 1 && envelope.cols >= order, "mcc_encode: envelope needs at least `order` bins");
  require(std::abs(warp) < 1, "mcc_encode: |warp| must be < 1");
  const auto& basis = warped_basis(envelope.cols, order, warp);
  Matrix out(envelope.rows, order);
  Eigen::VectorXd logs(envelope.cols);
  for (std::size_t t = 0; t < envelope.rows; ++t) {
    for (std::size_t k = 0; k < envelope.cols; ++k) {
      const double v = envelope(t, k);
      require(std::isfinite(v) && v >= 0, "mcc_encode: envelope entry (" + std::to_string(t) + "," +
                                              std::to_string(k) + ") is negative or non-finite");
      logs[static_cast<Eigen::Index>(k)] = std::log(std::max(v, floor));
    }
    Eigen::Map<Eigen::VectorXd>(out.row(t).data(), static_cast<Eigen::Index>(order)) = basis.analysis * logs;
  }
  return out;
}

Matrix mcc_decode(const Matrix& mcc, std::size_t bins, double warp) {
  require(mcc.cols >= 1 && bins >= mcc.cols, "mcc_decode: need at least as many bins as coefficients");
  require(std::abs(warp) < 1, "mcc_decode: |warp| must be < 1");
  const auto& basis = warped_basis(bins, mcc.cols, warp);
  Matrix out(mcc.rows, bins);
  for (std::size_t t = 0; t < mcc.rows; ++t) {
    for (double v : mcc.row(t)) require(std::isfinite(v), "mcc_decode: non-finite coefficient");
    Eigen::Map<const Eigen::VectorXd> c(mcc.row(t).data(), static_cast<Eigen::Index>(mcc.cols));
    Eigen::VectorXd logs = basis.synth * c;
    for (std::size_t k = 0; k < bins; ++k) out(t, k) = std::exp(logs[static_cast<Eigen::Index>(k)]);
  }
  return out;
}

std::vector<double> energy_contour(const Matrix& envelope) {
  std::vector<double> e(envelope.rows, 0.0);
  for (std::size_t t = 0; t < envelope.rows; ++t)
    for (double v : envelope.row(t)) e[t] += v;
  return e;
}

FeatureSet analyze(const Waveform& w, const AnalysisConfig& cfg) {
  cfg.validate(w.sample_rate);
  PitchTrack pitch = estimate_f0(w, cfg);
  const Matrix env = spectral_envelope(w, cfg, pitch.f0);
  FeatureSet fs;
  fs.mcc = mcc_encode(env, cfg.mcc_order, cfg.warp, cfg.envelope_floor);
  fs.energy = energy_contour(env);
  fs.f0 = std::move(pitch.f0);
  fs.voicing = std::move(pitch.voicing);
  fs.aperiodicity.resize(fs.f0.size());
  for (std::size_t t = 0; t < fs.f0.size(); ++t)
    fs.aperiodicity[t] = fs.voicing[t] ? std::clamp(1.0 - pitch.periodicity[t], 0.0, 1.0) : 1.0;
  fs.frame_shift = static_cast<double>(cfg.shift_samples(w.sample_rate)) / w.sample_rate;
  fs.sample_rate = w.sample_rate;
  fs.window = cfg.window_samples(w.sample_rate);
  fs.fft_size = cfg.fft_size;
  fs.warp = cfg.warp;
  fs.validate();
  return fs;
}

}  // namespace emovc::dsp
