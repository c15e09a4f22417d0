// SPDX-License-Identifier: Apache-2.0
#include "emovc/dsp/fft.hpp"

#include <algorithm>
#include <mutex>

#include "emovc/error.hpp"

namespace emovc::dsp {

namespace {
// FFTW's planner is not re-entrant.
std::mutex planner_mutex;
}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  require(n >= 2 && n % 2 == 0, "FFT size must be even and >= 2");
  std::lock_guard lock(planner_mutex);
  time_ = fftw_alloc_real(n);
  freq_ = fftw_alloc_complex(n / 2 + 1);
  const int ni = static_cast<int>(n);
  fwd_ = fftw_plan_dft_r2c_1d(ni, time_, freq_, FFTW_ESTIMATE);
  inv_ = fftw_plan_dft_c2r_1d(ni, freq_, time_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex);
  fftw_destroy_plan(fwd_);
  fftw_destroy_plan(inv_);
  fftw_free(time_);
  fftw_free(freq_);
}

void RealFft::forward(std::span<const double> time, std::span<std::complex<double>> spec) {
  std::copy(time.begin(), time.end(), time_);
  fftw_execute(fwd_);
  for (std::size_t k = 0; k < bins(); ++k) spec[k] = {freq_[k][0], freq_[k][1]};
}

void RealFft::inverse(std::span<const std::complex<double>> spec, std::span<double> time) {
  for (std::size_t k = 0; k < bins(); ++k) {
    freq_[k][0] = spec[k].real();
    freq_[k][1] = spec[k].imag();
  }
  fftw_execute(inv_);  // c2r destroys its input, which is our private buffer
  std::copy(time_, time_ + n_, time.begin());
}

}  // namespace emovc::dsp
