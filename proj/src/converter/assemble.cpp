// SPDX-License-Identifier: Apache-2.0
#include "emovc/converter/assemble.hpp"

#include <algorithm>
#include <cmath>

#include "emovc/error.hpp"

namespace emovc::converter {

using model::FeatureCombo;
using model::FeatureLayout;

std::vector<double> log_energy(const dsp::FeatureSet& fs) {
  std::vector<double> le(fs.frames());
  for (std::size_t t = 0; t < le.size(); ++t) le[t] = std::log(std::max(fs.energy[t], kEnergyFloor));
  return le;
}

prosody::ProsodyTrack lf0_track(const dsp::FeatureSet& fs) {
  prosody::ProsodyTrack track;
  track.values.resize(fs.frames(), 0.0);
  track.mask = fs.voicing;
  for (std::size_t t = 0; t < fs.frames(); ++t)
    if (fs.voicing[t]) track.values[t] = std::log(fs.f0[t]);
  return prosody::interpolate_unvoiced(track);
}

RawRows raw_rows(const dsp::FeatureSet& fs, FeatureCombo combo) {
  fs.validate();
  require(fs.mcc.cols == model::kMccOrder, "raw_rows: expected " + std::to_string(model::kMccOrder) +
                                               " mel-cepstral coefficients, got " + std::to_string(fs.mcc.cols));
  const auto layout = FeatureLayout::for_combo(combo);
  const std::size_t frames = fs.frames();
  RawRows out;
  out.rows = Matrix(layout.feature_rows(), frames);
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t m = 0; m < model::kMccOrder; ++m) out.rows(m, t) = fs.mcc(t, m);

  auto put_cwt = [&](const model::Segment& seg, const prosody::ProsodyTrack& track, prosody::NormStats& stats) {
    const auto c = prosody::cwt_decompose(track);
    stats = c.stats;
    for (std::size_t s = 0; s < seg.rows(); ++s)
      for (std::size_t t = 0; t < frames; ++t) out.rows(seg.begin + s, t) = c.coeffs(s, t);
  };
  if (const auto* seg = layout.find("lf0")) {
    const auto track = lf0_track(fs);
    for (std::size_t t = 0; t < frames; ++t) out.rows(seg->begin, t) = track.values[t];
  }
  if (const auto* seg = layout.find("lf0cwt")) put_cwt(*seg, lf0_track(fs), out.utterance.lf0);
  if (const auto* seg = layout.find("lecwt")) {
    prosody::ProsodyTrack le;
    le.values = log_energy(fs);
    le.mask.assign(frames, 1);
    put_cwt(*seg, le, out.utterance.le);
  }
  return out;
}

namespace {
void check_stats(const CorpusStats& stats, const FeatureLayout& layout) {
  if (stats.rows.mean.size() != layout.height() || stats.rows.std.size() != layout.height())
    fail(ErrorCode::configuration, "normalisation statistics do not match combination " +
                                       model::combo_name(layout.combo) + " (need " +
                                       std::to_string(layout.height()) + " rows)");
  for (double s : stats.rows.std)
    if (!(s > 0)) fail(ErrorCode::configuration, "normalisation statistics contain a non-positive std");
}
}  // namespace

model::FeatureTensor assemble(const RawRows& raw, const CorpusStats& stats) {
  const auto layout = FeatureLayout::for_combo(stats.combo);
  check_stats(stats, layout);
  require(raw.rows.rows == layout.feature_rows(), "assemble: raw rows do not match the layout");
  const std::size_t frames = raw.rows.cols, height = layout.height();
  require(frames >= 1, "assemble: empty utterance");
  const std::size_t width = (frames + 3) / 4 * 4;
  std::vector<double> data(height * width, 0.0);
  for (std::size_t r = 0; r < raw.rows.rows; ++r)
    for (std::size_t c = 0; c < width; ++c) {
      const double v = raw.rows(r, std::min(c, frames - 1));
      data[r * width + c] = (v - stats.rows.mean[r]) / stats.rows.std[r];
    }
  model::FeatureTensor s;
  s.layout = layout;
  s.stats = stats.rows;
  s.data = nd::Tensor::from({1, 1, height, width}, std::move(data));
  return s;
}

model::FeatureTensor assemble(const dsp::FeatureSet& fs, const CorpusStats& stats) {
  return assemble(raw_rows(fs, stats.combo), stats);
}

Matrix destandardise(const model::FeatureTensor& s, std::size_t frames, std::size_t b) {
  s.validate();
  require(frames <= s.width() && b < s.batch(), "destandardise: frame or batch index out of range");
  require(s.stats.mean.size() == s.height() && s.stats.std.size() == s.height(),
          "destandardise: tensor carries no matching statistics");
  const std::size_t rows = s.layout.feature_rows(), h = s.height(), w = s.width();
  Matrix out(rows, frames);
  const auto data = s.data.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t t = 0; t < frames; ++t) out(r, t) = data[(b * h + r) * w + t] * s.stats.std[r] + s.stats.mean[r];
  return out;
}

dsp::FeatureSet features_from_rows(const Matrix& rows, FeatureCombo combo, const dsp::FeatureSet& source,
                                   const UtteranceProsody& utterance) {
  const auto layout = FeatureLayout::for_combo(combo);
  require(rows.rows == layout.feature_rows(), "features_from_rows: row count does not match the layout");
  require(rows.cols == source.frames(), "features_from_rows: frame count differs from the source");
  const std::size_t frames = rows.cols;
  dsp::FeatureSet fs = source;
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t m = 0; m < model::kMccOrder; ++m) fs.mcc(t, m) = rows(m, t);

  auto reconstruct = [&](const model::Segment& seg, const prosody::NormStats& stats) {
    prosody::CwtMatrix c;
    c.coeffs = Matrix(seg.rows(), frames);
    for (std::size_t s = 0; s < seg.rows(); ++s)
      for (std::size_t t = 0; t < frames; ++t) c.coeffs(s, t) = rows(seg.begin + s, t);
    c.scales = prosody::cwt_scales();
    c.stats = stats;
    return prosody::cwt_reconstruct(c).values;
  };
  std::vector<double> lf0;
  if (const auto* seg = layout.find("lf0")) {
    lf0.resize(frames);
    for (std::size_t t = 0; t < frames; ++t) lf0[t] = rows(seg->begin, t);
  }
  if (const auto* seg = layout.find("lf0cwt")) lf0 = reconstruct(*seg, utterance.lf0);
  if (!lf0.empty())
    for (std::size_t t = 0; t < frames; ++t) fs.f0[t] = source.voicing[t] ? std::clamp(std::exp(lf0[t]), 20.0, source.sample_rate / 4) : 0.0;
  if (const auto* seg = layout.find("lecwt")) {
    const auto le = reconstruct(*seg, utterance.le);
    for (std::size_t t = 0; t < frames; ++t) fs.energy[t] = std::exp(std::min(le[t], 50.0));
  }
  fs.validate();
  return fs;
}

double lg_transform(double log_value, const prosody::NormStats& from, const prosody::NormStats& to) {
  require(from.std > 0 && to.std > 0, "lg_transform: statistics need positive std");
  return (log_value - from.mean) / from.std * to.std + to.mean;
}

prosody::NormStats lg_transform_stats(const prosody::NormStats& utt, const prosody::NormStats& from,
                                      const prosody::NormStats& to) {
  return {lg_transform(utt.mean, from, to), utt.std * to.std / from.std};
}

}  // namespace emovc::converter
