// SPDX-License-Identifier: Apache-2.0
//
// Split-level evaluation of a trained bundle and Table-3-style reports.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "emovc/converter/converter.hpp"
#include "emovc/corpus/corpus.hpp"
#include "emovc/evalkit/metrics.hpp"
#include "emovc/evalkit/probe.hpp"

namespace emovc::evalkit {

struct UtteranceMetrics {
  std::string name;
  double mcd = 0.0;
  double logf0_mse = 0.0;  // NaN when undefined
  std::size_t logf0_used = 0, logf0_excluded = 0;
  double f0_source = 0.0;     // mean voiced F0 of the source recording
  double f0_target = 0.0;     // of the parallel target recording
  double f0_converted = 0.0;  // extracted from the converted waveform
  double probe_b = 0.0;       // probe probability of the probe's emotion_b (NaN without a probe)
  bool probe_hit = false;     // probe labelled it as the target emotion
  bool operator==(const UtteranceMetrics&) const;
};

struct EvalReport {
  std::string combo;
  std::string source, target;
  std::string split;
  std::uint64_t model_hash = 0;
  std::uint64_t config_hash = 0;
  std::vector<UtteranceMetrics> utterances;
  double mean_mcd = 0.0;
  double mean_logf0_mse = 0.0;  // over defined utterances; NaN when none
  std::size_t logf0_undefined = 0;
  double probe_rate = 0.0;  // NaN without a probe
  double f0_source = 0.0, f0_target = 0.0, f0_converted = 0.0;

  /// Recomputes the aggregates from the per-utterance values.
  void finalize();
  /// Fraction of the source-to-target mean-F0 gap covered by the conversion.
  double f0_shift_fraction() const;
  bool has_undefined() const { return logf0_undefined > 0 || utterances.empty(); }
};

struct EvalOptions {
  std::string split = "eval";
  converter::Direction direction = converter::Direction::a_to_b;
  bool exclude_c0 = false;
  std::size_t dtw_band = 0;
  const Probe* probe = nullptr;
  dsp::AnalysisConfig analysis;
  dsp::SynthesisConfig synthesis;
  std::filesystem::path wav_dir;  // converted WAVs are written here when non-empty
};

/// Converts every source utterance of the split that has a parallel target
/// recording and scores it against that recording.
EvalReport evaluate(const converter::ModelBundle& bundle, const corpus::CorpusManifest& corpus, const EvalOptions& opt);

double mean_voiced_f0(const dsp::FeatureSet& fs);

/// Long CSV: one row per utterance plus a trailing aggregate row per report.
void write_report_csv(std::ostream& os, const std::vector<EvalReport>& reports);
void save_report_csv(const std::filesystem::path& path, const std::vector<EvalReport>& reports);
std::vector<EvalReport> load_report_csv(const std::filesystem::path& path);

/// Aligned text table: one row per (combo, direction) with MCD, LogF0-MSE
/// and probe rate columns, labelled like the paper's CycleGAN rows.
std::string render_table(const std::vector<EvalReport>& reports);

}  // namespace emovc::evalkit
