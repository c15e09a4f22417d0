// SPDX-License-Identifier: Apache-2.0
#include "emovc/model/layout.hpp"

#include "emovc/error.hpp"

namespace emovc::model {

const std::vector<FeatureCombo>& all_combos() {
  static const std::vector<FeatureCombo> combos{FeatureCombo::mcc, FeatureCombo::mcc_lf0, FeatureCombo::mcc_lf0cwt,
                                                FeatureCombo::mcc_lf0cwt_lecwt};
  return combos;
}

std::string combo_name(FeatureCombo combo) {
  switch (combo) {
    case FeatureCombo::mcc: return "mcc";
    case FeatureCombo::mcc_lf0: return "mcc+lf0";
    case FeatureCombo::mcc_lf0cwt: return "mcc+lf0cwt";
    case FeatureCombo::mcc_lf0cwt_lecwt: return "mcc+lf0cwt+lecwt";
  }
  return "?";
}

FeatureCombo parse_combo(const std::string& name) {
  for (auto c : all_combos())
    if (combo_name(c) == name) return c;
  fail(ErrorCode::configuration,
       "unknown feature combination '" + name + "' (expected mcc, mcc+lf0, mcc+lf0cwt or mcc+lf0cwt+lecwt)");
}

FeatureLayout FeatureLayout::for_combo(FeatureCombo combo) {
  FeatureLayout l;
  l.combo = combo;
  std::size_t row = 0;
  auto push = [&](const char* name, std::size_t n) {
    l.segments.push_back({name, row, row + n});
    row += n;
  };
  push("mcc", kMccOrder);
  switch (combo) {
    case FeatureCombo::mcc: break;
    case FeatureCombo::mcc_lf0: push("lf0", 1); break;
    case FeatureCombo::mcc_lf0cwt: push("lf0cwt", kCwtScales); break;
    case FeatureCombo::mcc_lf0cwt_lecwt:
      push("lf0cwt", kCwtScales);
      push("lecwt", kCwtScales);
      break;
  }
  if (row % 8) push("pad", 8 - row % 8);
  return l;
}

std::size_t FeatureLayout::height() const { return segments.empty() ? 0 : segments.back().end; }

std::size_t FeatureLayout::feature_rows() const {
  const Segment* pad = find("pad");
  return pad ? pad->begin : height();
}

const Segment* FeatureLayout::find(const std::string& name) const {
  for (const auto& s : segments)
    if (s.name == name) return &s;
  return nullptr;
}

void FeatureTensor::validate() const {
  require(data.defined() && data.rank() == 4 && data.dim(1) == 1,
          "FeatureTensor: data must be [B,1,H,W]");
  require(data.dim(2) == layout.height(), "FeatureTensor: height " + std::to_string(data.dim(2)) +
                                              " does not match layout height " + std::to_string(layout.height()));
  std::size_t expect = 0;
  for (const auto& s : layout.segments) {
    require(s.begin == expect && s.end > s.begin, "FeatureTensor: layout segments must be contiguous");
    expect = s.end;
  }
  require(layout.height() % 4 == 0, "FeatureTensor: padded height must be a multiple of 4");
}

}  // namespace emovc::model
