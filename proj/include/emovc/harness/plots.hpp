// SPDX-License-Identifier: Apache-2.0
//
// Minimal SVG line charts: loss curves and F0 contours.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "emovc/dsp/features.hpp"
#include "emovc/trainer/trainer.hpp"

namespace emovc::harness {

struct Series {
  std::string label;
  std::vector<double> x, y;  // non-finite y values break the line
};

struct Chart {
  std::string title;
  std::string x_label, y_label;
  std::vector<Series> series;
  std::uint64_t config_hash = 0;  // written into a comment
};

std::string render_svg(const Chart& chart);
void write_svg(const std::filesystem::path& path, const Chart& chart);

Chart loss_chart(const std::vector<trainer::LossRecord>& losses, std::uint64_t config_hash);
/// Voiced F0 of the source and converted utterances against time (unvoiced frames left blank).
Chart f0_chart(const dsp::FeatureSet& source, const dsp::FeatureSet& converted, std::uint64_t config_hash);

}  // namespace emovc::harness
