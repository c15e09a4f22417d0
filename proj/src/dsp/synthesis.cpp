// SPDX-License-Identifier: Apache-2.0
#include "emovc/dsp/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "emovc/error.hpp"
#include "emovc/dsp/fft.hpp"

namespace emovc::dsp {

namespace {

// Unit-power excitation: pulses of height sqrt(period) in voiced regions mixed
// with white noise by the aperiodicity stub; pure noise elsewhere.
std::vector<double> excitation(const FeatureSet& fs, std::size_t length, std::size_t hop, std::size_t win,
                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> e(length, 0.0);
  const std::size_t frames = fs.frames();
  double phase = 0.0;
  for (std::size_t n = 0; n < length; ++n) {
    // Position in frame units relative to frame centres.
    const double pos = (static_cast<double>(n) - win / 2.0) / static_cast<double>(hop);
    const auto t = static_cast<std::size_t>(std::clamp(std::lround(pos), 0L, static_cast<long>(frames) - 1));
    const double noise = gauss(rng);
    if (!fs.voicing[t]) {
      e[n] = noise;
      phase = 0.0;
      continue;
    }
    // Linear F0 interpolation between neighbouring voiced frame centres.
    double f0 = fs.f0[t];
    const double lo = std::floor(pos);
    if (lo >= 0 && lo + 1 < static_cast<double>(frames)) {
      const auto a = static_cast<std::size_t>(lo);
      if (fs.voicing[a] && fs.voicing[a + 1]) f0 = fs.f0[a] + (pos - lo) * (fs.f0[a + 1] - fs.f0[a]);
    }
    const double period = fs.sample_rate / f0;
    const double ap = std::clamp(fs.aperiodicity[t], 0.0, 1.0);
    e[n] += std::sqrt(ap) * noise;
    phase += 1.0 / period;
    if (phase >= 1.0) {
      phase -= std::floor(phase);
      // The crossing fell `frac` samples before n: split the pulse linearly
      // between n-1 and n so the period is not quantised to whole samples.
      const double frac = std::min(phase * period, 1.0);
      const double height = std::sqrt(1.0 - ap) * std::sqrt(period);
      e[n] += (1.0 - frac) * height;
      if (n > 0) e[n - 1] += frac * height;
    }
  }
  return e;
}

}  // namespace

Waveform synthesize(const FeatureSet& fs, const SynthesisConfig& cfg) {
  fs.validate();
  require(fs.frames() >= 1, "synthesize: empty feature set");
  require(fs.fft_size >= fs.window && fs.window >= 2, "synthesize: inconsistent window / fft size");
  const std::size_t hop = static_cast<std::size_t>(std::lround(fs.frame_shift * fs.sample_rate));
  require(hop >= 1, "synthesize: frame shift below one sample");
  const std::size_t win = fs.window, n = fs.fft_size, bins = n / 2 + 1;
  const std::size_t length = (fs.frames() - 1) * hop + win;

  const auto exc = excitation(fs, length, hop, win, cfg.seed);
  const Matrix env = mcc_decode(fs.mcc, bins, fs.warp);

  std::vector<double> window(win);
  double wsum = 0.0;
  for (std::size_t i = 0; i < win; ++i) wsum += window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / win);
  const double ola_gain = static_cast<double>(hop) / wsum;

  // Zero-phase filtering of each windowed excitation segment, placed mid-buffer
  // so the symmetric impulse response does not wrap.
  const std::size_t offset = (n - win) / 2;
  RealFft fft(n);
  std::vector<double> buf(n);
  std::vector<std::complex<double>> spec(bins);
  Waveform out;
  out.sample_rate = fs.sample_rate;
  out.samples.assign(length, 0.0);
  for (std::size_t t = 0; t < fs.frames(); ++t) {
    if (fs.energy[t] <= cfg.silence_energy) continue;
    std::fill(buf.begin(), buf.end(), 0.0);
    for (std::size_t i = 0; i < win; ++i) buf[offset + i] = exc[t * hop + i] * window[i];
    fft.forward(buf, spec);
    for (std::size_t k = 0; k < bins; ++k) spec[k] *= std::sqrt(env(t, k)) / static_cast<double>(n);
    fft.inverse(spec, buf);
    const auto origin = static_cast<std::ptrdiff_t>(t * hop) - static_cast<std::ptrdiff_t>(offset);
    for (std::size_t j = 0; j < n; ++j) {
      const std::ptrdiff_t s = origin + static_cast<std::ptrdiff_t>(j);
      if (s >= 0 && s < static_cast<std::ptrdiff_t>(length)) out.samples[static_cast<std::size_t>(s)] += buf[j] * ola_gain;
    }
  }
  return out;
}

}  // namespace emovc::dsp
