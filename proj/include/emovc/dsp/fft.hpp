// SPDX-License-Identifier: Apache-2.0
// Thin FFTW wrapper for real transforms of one fixed size.
#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <span>

namespace emovc::dsp {

class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  /// Time buffer of length size(); bins() complex values written to `spec`.
  void forward(std::span<const double> time, std::span<std::complex<double>> spec);
  /// Unnormalised inverse: forward followed by inverse scales by size().
  void inverse(std::span<const std::complex<double>> spec, std::span<double> time);

 private:
  std::size_t n_;
  double* time_;
  fftw_complex* freq_;
  fftw_plan fwd_, inv_;
};

}  // namespace emovc::dsp
