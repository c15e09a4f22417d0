// SPDX-License-Identifier: Apache-2.0
#include "emovc/converter/converter.hpp"

#include <cmath>
#include <cstdio>

#include "emovc/error.hpp"
#include "emovc/ndgrad/tensor.hpp"

namespace emovc::converter {

Matrix energy_rescale(const Matrix& envelope, const std::vector<double>& target, std::size_t* skipped) {
  require(target.size() == envelope.rows, "energy_rescale: one target energy per frame required");
  const auto current = dsp::energy_contour(envelope);
  Matrix out = envelope;
  for (std::size_t t = 0; t < envelope.rows; ++t) {
    for (double v : envelope.row(t)) require(v >= 0 && std::isfinite(v), "energy_rescale: envelope must be finite and non-negative");
    require(target[t] >= 0 && std::isfinite(target[t]), "energy_rescale: target energies must be finite and non-negative");
    if (current[t] <= 0) {
      if (target[t] > 0 && !skipped)
        fail(ErrorCode::degenerate, "energy_rescale: frame " + std::to_string(t) + " has zero energy but a positive target");
      if (target[t] > 0) ++*skipped;
      continue;
    }
    const double r = target[t] / current[t];
    for (double& v : out.row(t)) v *= r;
  }
  return out;
}

dsp::FeatureSet convert_features(const dsp::FeatureSet& fs, const CorpusStats& stats, const std::string& from,
                                 const std::string& to, const GeneratorFn& generator, std::size_t* rescale_skipped) {
  const auto src = stats.emotions.find(from), dst = stats.emotions.find(to);
  if (src == stats.emotions.end() || dst == stats.emotions.end())
    fail(ErrorCode::configuration, "conversion statistics lack emotion '" + (src == stats.emotions.end() ? from : to) + "'");
  if (fs.frames() > kMaxFrames)
    fail(ErrorCode::configuration, "utterance of " + std::to_string(fs.frames()) + " frames exceeds the converter limit of " +
                                       std::to_string(kMaxFrames));
  const auto combo = stats.combo;
  const auto layout = model::FeatureLayout::for_combo(combo);
  const auto raw = raw_rows(fs, combo);
  const auto converted = generator(assemble(raw, stats));
  require(converted.height() == layout.height() && converted.width() >= fs.frames() && converted.batch() == 1,
          "generator changed the feature tensor shape");
  // Padded columns are dropped here.
  const Matrix rows = destandardise(converted, fs.frames());

  // CWT rows are denormalised with the source utterance statistics mapped to the target emotion.
  UtteranceProsody utt;
  utt.lf0 = lg_transform_stats(raw.utterance.lf0, src->second.lf0, dst->second.lf0);
  utt.le = lg_transform_stats(raw.utterance.le, src->second.le, dst->second.le);
  if (!layout.has("lf0cwt")) utt.lf0 = raw.utterance.lf0;
  if (!layout.has("lecwt")) utt.le = raw.utterance.le;
  dsp::FeatureSet out = features_from_rows(rows, combo, fs, utt);

  if (!layout.has("lf0") && !layout.has("lf0cwt"))
    for (std::size_t t = 0; t < out.frames(); ++t)
      if (out.voicing[t]) out.f0[t] = std::exp(lg_transform(std::log(fs.f0[t]), src->second.lf0, dst->second.lf0));

  if (layout.has("lecwt")) {
    const auto env = dsp::mcc_decode(out.mcc, out.envelope_bins(), out.warp);
    std::size_t skipped = 0;
    const auto scaled = energy_rescale(env, out.energy, &skipped);
    if (skipped) std::fprintf(stderr, "warning: energy rescaling skipped %zu silent frame(s)\n", skipped);
    if (rescale_skipped) *rescale_skipped = skipped;
    out.mcc = dsp::mcc_encode(scaled, out.mcc.cols, out.warp);
  }
  out.aperiodicity = fs.aperiodicity;
  out.voicing = fs.voicing;
  out.provenance = "converted";
  out.validate();
  return out;
}

ConversionResult convert_utterance(const ModelBundle& bundle, const dsp::FeatureSet& fs, Direction direction,
                                   const dsp::SynthesisConfig& synth) {
  require(bundle.models != nullptr, "convert_utterance: bundle holds no models");
  const bool forward = direction == Direction::a_to_b;
  const auto& g = forward ? bundle.models->g_ab : bundle.models->g_ba;
  GeneratorFn fn = [&g](const model::FeatureTensor& s) {
    nd::NoGradGuard guard;
    return model::generator_forward(g, s);
  };
  ConversionResult r;
  r.combo = bundle.combo();
  r.model_hash = bundle.config_hash;
  r.features = convert_features(fs, bundle.stats, forward ? bundle.emotion_a : bundle.emotion_b,
                                forward ? bundle.emotion_b : bundle.emotion_a, fn, &r.rescale_skipped);
  r.waveform = dsp::synthesize(r.features, synth);
  return r;
}

}  // namespace emovc::converter
