// SPDX-License-Identifier: Apache-2.0
//
// Utterance conversion: assemble, run a generator, rebuild prosody, rescale
// energy, resynthesise.
#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "emovc/converter/assemble.hpp"
#include "emovc/converter/bundle.hpp"
#include "emovc/dsp/synthesis.hpp"
#include "emovc/dsp/wav.hpp"

namespace emovc::converter {

enum class Direction { a_to_b, b_to_a };

/// Longest utterance (in frames) the converter accepts.
inline constexpr std::size_t kMaxFrames = 1u << 16;

using GeneratorFn = std::function<model::FeatureTensor(const model::FeatureTensor&)>;

struct ConversionResult {
  dsp::FeatureSet features;
  dsp::Waveform waveform;
  model::FeatureCombo combo = model::FeatureCombo::mcc;
  std::uint64_t model_hash = 0;
  std::size_t rescale_skipped = 0;  // silent frames left untouched by energy rescaling
};

/// Scales each envelope frame so its bin sum equals target[t]. Frames whose
/// bin sum is zero are left alone and counted in `skipped` when given;
/// without it they are a degenerate error.
Matrix energy_rescale(const Matrix& envelope, const std::vector<double>& target, std::size_t* skipped = nullptr);

/// Feature-level conversion between the named emotions of `stats`.
dsp::FeatureSet convert_features(const dsp::FeatureSet& fs, const CorpusStats& stats, const std::string& from,
                                 const std::string& to, const GeneratorFn& generator, std::size_t* rescale_skipped = nullptr);

ConversionResult convert_utterance(const ModelBundle& bundle, const dsp::FeatureSet& fs, Direction direction,
                                   const dsp::SynthesisConfig& synth = {});

}  // namespace emovc::converter
