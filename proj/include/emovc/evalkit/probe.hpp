// SPDX-License-Identifier: Apache-2.0
//
// Emotion probe: a classifier with the discriminator architecture, trained on
// genuine features only, used to judge whether converted speech carries the
// target emotion.
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "emovc/converter/assemble.hpp"
#include "emovc/corpus/corpus.hpp"
#include "emovc/model/networks.hpp"

namespace emovc::evalkit {

struct ProbeConfig {
  model::FeatureCombo combo = model::FeatureCombo::mcc_lf0;  // MCC carries loudness/tilt, the LF0 row pitch level
  double rho = 0.25;
  std::size_t crop_width = 64;
  std::size_t batch_size = 8;
  std::size_t steps = 300;
  double learning_rate = 5e-4;
  std::uint64_t seed = 11;
  void validate() const;
};

class Probe {
 public:
  Probe(std::string emotion_a, std::string emotion_b, ProbeConfig cfg = {});

  /// Trains on genuine features. FeatureSets tagged "eval" or "converted" are
  /// rejected; so is a side with no utterances.
  void fit(const std::vector<dsp::FeatureSet>& a, const std::vector<dsp::FeatureSet>& b);
  /// Zeroes every weight (the network then answers 0.5 everywhere).
  void zero();

  /// Probability of emotion_b, averaged over the utterance's crops.
  double prob_b(const dsp::FeatureSet& fs) const;
  /// emotion_b when prob_b > 0.5, else emotion_a.
  std::string classify(const dsp::FeatureSet& fs) const;
  /// Fraction of utterances classified as `emotion`.
  double rate(const std::vector<dsp::FeatureSet>& utts, const std::string& emotion) const;

  const std::string& emotion_a() const { return a_; }
  const std::string& emotion_b() const { return b_; }
  bool fitted() const { return fitted_; }

 private:
  std::string a_, b_;
  ProbeConfig cfg_;
  converter::CorpusStats stats_;
  std::shared_ptr<model::ClassifierNet> net_;
  bool fitted_ = false;
};

/// Trains a probe on the train and val splits of the two emotions.
Probe train_probe(const corpus::CorpusManifest& m, const std::string& emotion_a, const std::string& emotion_b,
                  const ProbeConfig& cfg = {}, const dsp::AnalysisConfig& analysis = {});

}  // namespace emovc::evalkit
