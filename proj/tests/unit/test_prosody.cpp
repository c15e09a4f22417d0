// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "support/errors.hpp"
#include "emovc/error.hpp"
#include "emovc/prosody/cwt.hpp"

using namespace emovc;
using emovc::testing::code_of;
using namespace emovc::prosody;

namespace {

ProsodyTrack track_of(std::vector<double> v) {
  ProsodyTrack t;
  t.mask.assign(v.size(), 1);
  t.values = std::move(v);
  return t;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ma += a[i], mb += b[i];
  ma /= a.size();
  mb /= b.size();
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

std::vector<double> band_limited(std::mt19937_64& rng, std::size_t frames) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> x(frames, 5.0);
  for (int j = 0; j < 4; ++j) {
    const double period = std::exp(std::log(8.0) + u(rng) * (std::log(300.0) - std::log(8.0)));
    const double amp = g(rng), phase = 2 * std::numbers::pi * u(rng);
    for (std::size_t t = 0; t < frames; ++t) x[t] += amp * std::sin(2 * std::numbers::pi * t / period + phase);
  }
  return x;
}

}  // namespace

TEST_CASE("interpolate_unvoiced") {
  auto full = track_of({1.0, 2.0, 3.0});
  CHECK(interpolate_unvoiced(full).values == full.values);

  ProsodyTrack gap;
  gap.values = {std::log(100.0), 0.0, std::log(200.0)};
  gap.mask = {1, 0, 1};
  const auto filled = interpolate_unvoiced(gap);
  CHECK(filled.values[1] == doctest::Approx(std::log(std::sqrt(20000.0))).epsilon(1e-14));
  CHECK(filled.mask == gap.mask);

  ProsodyTrack lead;
  lead.values = {0.0, 0.0, std::log(150.0), std::log(160.0), 0.0};
  lead.mask = {0, 0, 1, 1, 0};
  const auto l = interpolate_unvoiced(lead);
  CHECK(l.values[0] == std::log(150.0));
  CHECK(l.values[1] == std::log(150.0));
  CHECK(l.values[4] == std::log(160.0));

  ProsodyTrack none;
  none.values = {1, 2};
  none.mask = {0, 0};
  CHECK(code_of([&] { interpolate_unvoiced(none); }) == ErrorCode::insufficient_input);
}

TEST_CASE("normalize and denormalize") {
  const auto s = compute_norm_stats({1.0, 3.0});
  CHECK(s.mean == 2.0);
  CHECK(s.std == 1.0);
  CHECK(normalize({1.0, 3.0}, s) == std::vector<double>{-1.0, 1.0});
  const std::vector<double> x{0.3, -1.7, 2.9, 4.25};
  const auto st = compute_norm_stats(x);
  const auto back = denormalize(normalize(x, st), st);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(back[i] - x[i]) < 1e-12);
  for (double v : denormalize({0.0, 0.0, 0.0}, {4.5, 2.0})) CHECK(v == 4.5);
  CHECK(code_of([] { compute_norm_stats({2.0, 2.0}); }) == ErrorCode::degenerate);
  CHECK(code_of([] { denormalize({1.0}, {0.0, 0.0}); }) == ErrorCode::degenerate);
}

TEST_CASE("decompose shape, scales and error cases") {
  const auto scales = cwt_scales();
  REQUIRE(scales.size() == 10);
  CHECK(scales.front() == 2.0);
  for (std::size_t i = 1; i < scales.size(); ++i) CHECK(scales[i] == 2.0 * scales[i - 1]);
  std::mt19937_64 rng(1);
  const auto m = cwt_decompose(track_of(band_limited(rng, 123)));
  CHECK(m.coeffs.rows == 10);
  CHECK(m.coeffs.cols == 123);
  CHECK(code_of([] { cwt_decompose(track_of(std::vector<double>(40, 1.5))); }) == ErrorCode::degenerate);
  CHECK(code_of([] { cwt_decompose(track_of(std::vector<double>(15, 1.5))); }) == ErrorCode::insufficient_input);
}

TEST_CASE("decomposition is linear and odd") {
  std::mt19937_64 rng(2);
  const auto x = band_limited(rng, 200), y = band_limited(rng, 200);
  std::vector<double> combo(200), neg(200);
  for (std::size_t t = 0; t < 200; ++t) combo[t] = 2.5 * x[t] - 0.75 * y[t], neg[t] = -x[t];
  const auto cx = cwt_transform(x), cy = cwt_transform(y), cc = cwt_transform(combo);
  for (std::size_t i = 0; i < cc.data.size(); ++i)
    CHECK(std::abs(cc.data[i] - (2.5 * cx.data[i] - 0.75 * cy.data[i])) < 1e-9);
  const auto dx = cwt_decompose(track_of(x)), dn = cwt_decompose(track_of(neg));
  for (std::size_t i = 0; i < dx.coeffs.data.size(); ++i) CHECK(std::abs(dn.coeffs.data[i] + dx.coeffs.data[i]) < 1e-9);
}

TEST_CASE("sinusoid energy peaks at the scale predicted by the wavelet response") {
  // |psi_hat_s(w)|^2 is proportional to s (s w)^4 exp(-(s w)^2) for the Mexican hat,
  // maximised at s = sqrt(5/2) / w.
  const auto scales = cwt_scales();
  for (double period : {16.0, 32.0, 64.0, 128.0, 250.0}) {
    const double w = 2 * std::numbers::pi / period;
    std::size_t predicted = 0;
    double best = -1;
    for (std::size_t i = 0; i < scales.size(); ++i) {
      const double sw = scales[i] * w;
      const double r = scales[i] * std::pow(sw, 4) * std::exp(-sw * sw);
      if (r > best) best = r, predicted = i;
    }
    std::vector<double> x(4096);
    for (std::size_t t = 0; t < x.size(); ++t) x[t] = std::sin(w * t);
    const auto m = cwt_transform(x);
    std::size_t measured = 0;
    double top = -1;
    for (std::size_t i = 0; i < m.rows; ++i) {
      double e = 0;
      for (std::size_t t = 1024; t < 3072; ++t) e += m(i, t) * m(i, t);
      if (e > top) top = e, measured = i;
    }
    CAPTURE(period);
    CHECK(measured == predicted);
  }
}

TEST_CASE("reconstruction") {
  CwtMatrix zero;
  zero.coeffs = Matrix(10, 50);
  zero.stats = {3.2, 0.4};
  for (double v : cwt_reconstruct(zero).values) CHECK(v == 3.2);

  std::mt19937_64 rng(3);
  const auto x = band_limited(rng, 180);
  auto m = cwt_decompose(track_of(x));
  const auto base = cwt_reconstruct(m);
  for (auto& v : m.coeffs.data) v *= -2.0;
  const auto scaled = cwt_reconstruct(m);
  for (std::size_t t = 0; t < x.size(); ++t)
    CHECK(scaled.values[t] - m.stats.mean == doctest::Approx(-2.0 * (base.values[t] - m.stats.mean)).epsilon(1e-12));

  std::vector<double> corr;
  for (int trial = 0; trial < 100; ++trial) {
    const auto y = band_limited(rng, 150 + 5 * trial);
    corr.push_back(pearson(cwt_reconstruct(cwt_decompose(track_of(y))).values, y));
  }
  CHECK(*std::min_element(corr.begin(), corr.end()) >= 0.95);

  std::ostringstream os;
  write_cwt_csv(os, cwt_decompose(track_of(x)));
  CHECK(os.str().rfind("scale,t0,t1,", 0) == 0);
}
