// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <vector>

namespace emovc::dsp {

struct Waveform {
  std::vector<double> samples;  // nominally in [-1, 1]
  double sample_rate = 16000.0;

  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

/// RIFF/WAVE, 16-bit PCM, mono. Anything else is rejected with an io error.
Waveform read_wav(const std::filesystem::path& path);
/// Samples are clipped to [-1, 1] and rounded to 16-bit PCM.
void write_wav(const std::filesystem::path& path, const Waveform& w);

}  // namespace emovc::dsp
