// SPDX-License-Identifier: Apache-2.0
//
// Objective metrics: DTW alignment, mel-cepstral distortion and log-F0 MSE.
#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "emovc/common/matrix.hpp"

namespace emovc::evalkit {

struct DtwPath {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (i, j), monotone from (0,0) to (T1-1, T2-1)
  double cost = 0.0;                                       // sum of Euclidean frame distances along the path

  /// Throws contract_violation unless the path is a valid alignment of t1 x t2 frames.
  void validate(std::size_t t1, std::size_t t2) const;
};

/// Minimum-cost alignment of the rows of x and y with steps (1,0), (0,1),
/// (1,1). Ties prefer the diagonal, then (1,0). band > 0 restricts |i - j'|
/// around the rescaled diagonal (Sakoe-Chiba).
DtwPath dtw_align(const Matrix& x, const Matrix& y, std::size_t band = 0);

/// Mean over path pairs of (10/ln10) * sqrt(2 * sum_d (t_d - c_d)^2), over
/// all coefficients or all but the 0th.
double mcd(const Matrix& mcc_t, const Matrix& mcc_c, const DtwPath& path, bool exclude_c0 = false);

struct LogF0Mse {
  double value = 0.0;        // NaN when undefined
  std::size_t used = 0;      // co-voiced path pairs
  std::size_t excluded = 0;  // pairs voiced on one side only
  bool defined() const { return used > 0; }
};

/// Mean squared log-F0 difference over co-voiced path pairs.
LogF0Mse logf0_mse(const std::vector<double>& f0_t, const std::vector<double>& f0_c,
                   const std::vector<std::uint8_t>& voicing_t, const std::vector<std::uint8_t>& voicing_c,
                   const DtwPath& path);

}  // namespace emovc::evalkit
