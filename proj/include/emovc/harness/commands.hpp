// SPDX-License-Identifier: Apache-2.0
//
// The pipeline stages behind the command-line subcommands. Each reads a
// RunConfig, logs progress to stderr and writes its artifacts under the
// configured paths, tagged with the config hash.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "emovc/converter/converter.hpp"
#include "emovc/corpus/corpus.hpp"
#include "emovc/evalkit/evaluate.hpp"
#include "emovc/harness/config.hpp"

namespace emovc::harness {

/// One structured line on stderr: "emovc <stage>: <message>".
void log(const std::string& stage, const std::string& message);

/// Renders the synthetic corpus into `corpus`.
corpus::CorpusManifest synth_corpus(const RunConfig& cfg);
/// Fills the feature cache of `corpus`; returns the number of utterances.
std::size_t extract(const RunConfig& cfg);
/// Trains `source` <-> `target` into `out` (losses.csv, losses.svg, checkpoints/, model.ckpt, config.txt).
converter::ModelBundle train(const RunConfig& cfg);
/// Converts `input` with `model` in `direction`; writes `output`, plus
/// <output>.json, <output>.f0.svg and feature CSVs of both sides.
converter::ConversionResult convert(const RunConfig& cfg);
/// Scores `model` on `split` in both directions; writes out/report.csv and out/report.txt.
std::vector<evalkit::EvalReport> evaluate(const RunConfig& cfg);
/// Table text of `report` (default out/report.csv); redraws out/losses.svg when out/losses.csv exists.
std::string report(const RunConfig& cfg);

struct ExperimentResult {
  std::vector<evalkit::EvalReport> reports;                 // two per successful combination
  std::vector<std::pair<std::string, std::string>> failures;  // combination, error message
};

/// Trains and evaluates every combination in `combos` under out/<combo>/,
/// continuing past failures; writes out/experiment.csv and out/experiment.txt.
ExperimentResult experiment(const RunConfig& cfg);

std::string combo_slug(model::FeatureCombo combo);  // "mcc_lf0cwt_lecwt"

}  // namespace emovc::harness
