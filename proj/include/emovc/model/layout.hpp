// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "emovc/ndgrad/tensor.hpp"

namespace emovc::model {

/// Which prosodic representation travels with the 36 mel-cepstra.
enum class FeatureCombo { mcc, mcc_lf0, mcc_lf0cwt, mcc_lf0cwt_lecwt };

inline constexpr std::size_t kMccOrder = 36;
inline constexpr std::size_t kCwtScales = 10;

const std::vector<FeatureCombo>& all_combos();
std::string combo_name(FeatureCombo combo);  // "mcc", "mcc+lf0", "mcc+lf0cwt", "mcc+lf0cwt+lecwt"
FeatureCombo parse_combo(const std::string& name);

struct Segment {
  std::string name;  // mcc | lf0 | lf0cwt | lecwt | pad
  std::size_t begin = 0, end = 0;
  std::size_t rows() const { return end - begin; }
};

/// Ordered row map of the network input: contiguous, disjoint segments covering
/// 0..height-1, with zero pad rows appended to reach a multiple of 8
/// (heights 40, 40, 48, 56 for the four combinations).
struct FeatureLayout {
  FeatureCombo combo = FeatureCombo::mcc;
  std::vector<Segment> segments;

  static FeatureLayout for_combo(FeatureCombo combo);
  std::size_t height() const;          // padded height
  std::size_t feature_rows() const;    // rows before padding
  const Segment* find(const std::string& name) const;
  bool has(const std::string& name) const { return find(name) != nullptr; }
};

/// Per-row normalisation statistics (length = padded height; pad rows use 0/1).
struct RowStats {
  std::vector<double> mean;
  std::vector<double> std;
};

/// Network-facing matrix stack S: data is [B, 1, height, W].
struct FeatureTensor {
  nd::Tensor data;
  FeatureLayout layout;
  RowStats stats;

  std::size_t batch() const { return data.dim(0); }
  std::size_t height() const { return data.dim(2); }
  std::size_t width() const { return data.dim(3); }
  void validate() const;
};

}  // namespace emovc::model
