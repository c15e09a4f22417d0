// SPDX-License-Identifier: Apache-2.0
//
// FeatureSet <-> network tensor mapping for the four feature combinations.
// Raw rows are stacked per the layout (MCC, then log F0 or its CWT, then the
// log-energy CWT), standardised with corpus row statistics and zero-padded.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "emovc/common/matrix.hpp"
#include "emovc/dsp/features.hpp"
#include "emovc/model/layout.hpp"
#include "emovc/prosody/cwt.hpp"

namespace emovc::converter {

/// Energies are floored here before the logarithm.
inline constexpr double kEnergyFloor = 1e-8;
/// Row standard deviations below this are raised to it (and flagged).
inline constexpr double kStdFloor = 1e-6;

/// Per-utterance standardisation of the contours fed to the CWT.
struct UtteranceProsody {
  prosody::NormStats lf0;
  prosody::NormStats le;
};

/// Per-emotion statistics used by the logarithm-Gaussian transform.
struct EmotionStats {
  prosody::NormStats lf0;  // over voiced training frames
  prosody::NormStats le;   // over all training frames
};

/// Everything needed to standardise a corpus for one combination.
struct CorpusStats {
  model::FeatureCombo combo = model::FeatureCombo::mcc;
  model::RowStats rows;                          // padded height; pad rows are 0 / 1
  std::map<std::string, EmotionStats> emotions;  // keyed by emotion label
  std::vector<std::size_t> floored_rows;         // rows whose std hit kStdFloor
};

std::vector<double> log_energy(const dsp::FeatureSet& fs);
/// Log F0 with unvoiced frames interpolated; mask = voicing.
prosody::ProsodyTrack lf0_track(const dsp::FeatureSet& fs);

struct RawRows {
  Matrix rows;  // feature_rows x T, unnormalised
  UtteranceProsody utterance;
};

RawRows raw_rows(const dsp::FeatureSet& fs, model::FeatureCombo combo);

/// Standardised [1,1,H,W] tensor, W = T rounded up to a multiple of 4 (extra
/// columns repeat the last frame). Throws configuration when `stats` does not
/// match the combination.
model::FeatureTensor assemble(const RawRows& raw, const CorpusStats& stats);
model::FeatureTensor assemble(const dsp::FeatureSet& fs, const CorpusStats& stats);

/// Inverse of the standardisation on the first `frames` columns of item `b`.
Matrix destandardise(const model::FeatureTensor& s, std::size_t frames, std::size_t b = 0);

/// Rebuilds a FeatureSet from raw rows. Voicing, aperiodicity and framing come
/// from `source`; F0 is taken from the rows when the combination carries it
/// (otherwise left as in `source`); energy is replaced only for the LE CWT
/// combination. `utterance` denormalises CWT reconstructions.
dsp::FeatureSet features_from_rows(const Matrix& rows, model::FeatureCombo combo, const dsp::FeatureSet& source,
                                   const UtteranceProsody& utterance);

/// Logarithm-Gaussian mapping of a log-domain value between emotion statistics.
double lg_transform(double log_value, const prosody::NormStats& from, const prosody::NormStats& to);
/// Same mapping applied to an utterance's mean / std.
prosody::NormStats lg_transform_stats(const prosody::NormStats& utt, const prosody::NormStats& from,
                                      const prosody::NormStats& to);

}  // namespace emovc::converter
