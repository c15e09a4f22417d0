// SPDX-License-Identifier: Apache-2.0
//
// Continuous wavelet decomposition of log-F0 / log-energy contours: unvoiced
// gap filling, per-utterance standardisation, a 10-scale dyadic Mexican-hat
// transform and its weighted-sum approximate inverse.
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "emovc/common/matrix.hpp"

namespace emovc::prosody {

inline constexpr std::size_t kScales = 10;
inline constexpr double kBaseScale = 2.0;  // frames
inline constexpr std::size_t kMinFrames = 16;

struct NormStats {
  double mean = 0.0;
  double std = 1.0;
};

struct ProsodyTrack {
  std::vector<double> values;        // log Hz (LF0) or log energy (LE)
  std::vector<std::uint8_t> mask;    // 1 where the value was observed
  NormStats stats;                   // set once the track has been normalised
};

/// Scales (rows) x frames; `stats` are those of the contour before the transform.
struct CwtMatrix {
  Matrix coeffs;
  std::vector<double> scales;
  NormStats stats;
};

/// 2, 4, ..., 1024 frames.
std::vector<double> cwt_scales();

/// Linear interpolation over masked-out frames; edges held at the nearest
/// observed value. The mask is returned unchanged.
ProsodyTrack interpolate_unvoiced(const ProsodyTrack& track);

/// Population mean and standard deviation; degenerate error when std is 0.
NormStats compute_norm_stats(const std::vector<double>& values);
std::vector<double> normalize(const std::vector<double>& values, const NormStats& s);
std::vector<double> denormalize(const std::vector<double>& values, const NormStats& s);

/// The bare linear transform (no standardisation), reflect-padded by one
/// longest-scale support at each end.
Matrix cwt_transform(const std::vector<double>& values);

/// Standardises the contour, then transforms it. Requires T >= 16 and a
/// non-constant contour.
CwtMatrix cwt_decompose(const ProsodyTrack& track);

/// Weighted sum over scales with weights (i + 2.5)^(-5/2) (times a fixed gain
/// calibrating the in-band response to 1), then de-standardisation.
ProsodyTrack cwt_reconstruct(const CwtMatrix& m);

/// Rows are scales: "scale,t0,t1,...".
void write_cwt_csv(std::ostream& os, const CwtMatrix& m);

}  // namespace emovc::prosody
