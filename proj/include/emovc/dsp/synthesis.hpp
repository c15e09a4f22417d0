// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "emovc/dsp/features.hpp"
#include "emovc/dsp/wav.hpp"

namespace emovc::dsp {

struct SynthesisConfig {
  std::uint64_t seed = 1;
  // Frames whose energy is at or below this are rendered as silence.
  double silence_energy = 1e-6;
};

/// Pulse/noise excitation shaped per frame by the decoded mel-cepstral
/// envelope and overlap-added. Output length (T-1)*shift + window samples.
Waveform synthesize(const FeatureSet& fs, const SynthesisConfig& cfg = {});

}  // namespace emovc::dsp
