// SPDX-License-Identifier: Apache-2.0
#include "emovc/converter/bundle.hpp"

#include <algorithm>

#include "emovc/error.hpp"

namespace emovc::converter {

using nd::Tensor;

namespace {

constexpr const char* kArch = "meta/arch";
constexpr const char* kEmotionA = "meta/emotion_a/";
constexpr const char* kEmotionB = "meta/emotion_b/";
constexpr const char* kRowMean = "stats/row_mean";
constexpr const char* kRowStd = "stats/row_std";
constexpr const char* kFloored = "stats/floored";
constexpr const char* kEmotionStats = "stats/emotion/";

std::size_t combo_index(model::FeatureCombo c) {
  const auto& all = model::all_combos();
  return static_cast<std::size_t>(std::find(all.begin(), all.end(), c) - all.begin());
}

bool starts_with(const std::string& s, const std::string& p) { return s.rfind(p, 0) == 0; }

}  // namespace

std::vector<nd::NamedTensor> ModelBundle::tensors() const {
  require(models != nullptr, "ModelBundle: no models");
  const std::size_t h = height();
  require(stats.rows.mean.size() == h && stats.rows.std.size() == h, "ModelBundle: statistics do not match the layout");
  auto out = models->parameters();
  // Seeds and steps stay below 2^53 in practice; split into 32-bit halves to be safe.
  out.push_back({kArch, Tensor::from({8}, {rho, static_cast<double>(h), static_cast<double>(crop_width),
                                           static_cast<double>(combo_index(stats.combo)),
                                           static_cast<double>(seed >> 32), static_cast<double>(seed & 0xffffffffULL),
                                           static_cast<double>(step >> 32), static_cast<double>(step & 0xffffffffULL)})});
  out.push_back({kEmotionA + emotion_a, Tensor::scalar(0.0)});
  out.push_back({kEmotionB + emotion_b, Tensor::scalar(1.0)});
  out.push_back({kRowMean, Tensor::from({h}, stats.rows.mean)});
  out.push_back({kRowStd, Tensor::from({h}, stats.rows.std)});
  std::vector<double> floored(h, 0.0);
  for (auto r : stats.floored_rows) floored.at(r) = 1.0;
  out.push_back({kFloored, Tensor::from({h}, floored)});
  for (const auto& [name, e] : stats.emotions)
    out.push_back({kEmotionStats + name, Tensor::from({4}, {e.lf0.mean, e.lf0.std, e.le.mean, e.le.std})});
  return out;
}

nd::Checkpoint ModelBundle::to_checkpoint() const {
  nd::Checkpoint c;
  c.config_hash = config_hash;
  c.tensors = tensors();
  return c;
}

ModelBundle ModelBundle::from_checkpoint(const nd::Checkpoint& ckpt) {
  ModelBundle b;
  const Tensor* arch = ckpt.find(kArch);
  if (!arch || arch->size() != 8) fail(ErrorCode::configuration, "checkpoint carries no model bundle metadata");
  const auto a = arch->data();
  const auto combo_at = static_cast<std::size_t>(a[3]);
  if (combo_at >= model::all_combos().size()) fail(ErrorCode::configuration, "checkpoint names an unknown feature combination");
  b.rho = a[0];
  b.crop_width = static_cast<std::size_t>(a[2]);
  b.seed = (static_cast<std::uint64_t>(a[4]) << 32) | static_cast<std::uint64_t>(a[5]);
  b.step = (static_cast<std::uint64_t>(a[6]) << 32) | static_cast<std::uint64_t>(a[7]);
  b.config_hash = ckpt.config_hash;
  b.stats.combo = model::all_combos()[combo_at];
  const std::size_t h = b.height();
  if (static_cast<std::size_t>(a[1]) != h) fail(ErrorCode::configuration, "checkpoint height disagrees with its combination");

  for (const auto& t : ckpt.tensors) {
    if (starts_with(t.name, kEmotionA)) b.emotion_a = t.name.substr(std::string(kEmotionA).size());
    if (starts_with(t.name, kEmotionB)) b.emotion_b = t.name.substr(std::string(kEmotionB).size());
    if (starts_with(t.name, kEmotionStats)) {
      require(t.tensor.size() == 4, "malformed emotion statistics in checkpoint");
      const auto v = t.tensor.data();
      b.stats.emotions[t.name.substr(std::string(kEmotionStats).size())] = {{v[0], v[1]}, {v[2], v[3]}};
    }
  }
  if (b.emotion_a.empty() || b.emotion_b.empty()) fail(ErrorCode::configuration, "checkpoint carries no emotion labels");
  const Tensor& mean = ckpt.get(kRowMean);
  const Tensor& sd = ckpt.get(kRowStd);
  const Tensor& floored = ckpt.get(kFloored);
  if (mean.size() != h || sd.size() != h || floored.size() != h)
    fail(ErrorCode::configuration, "checkpoint statistics do not match the layout height");
  b.stats.rows.mean.assign(mean.data().begin(), mean.data().end());
  b.stats.rows.std.assign(sd.data().begin(), sd.data().end());
  for (std::size_t r = 0; r < h; ++r)
    if (floored.at(r) != 0.0) b.stats.floored_rows.push_back(r);

  b.models = std::make_shared<model::CycleGanModels>(b.rho, h, b.crop_width, b.seed);
  model::assign_parameters(b.models->parameters(), ckpt.tensors);
  return b;
}

void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle) {
  nd::save_checkpoint(path, bundle.to_checkpoint());
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  return ModelBundle::from_checkpoint(nd::load_checkpoint(path));
}

}  // namespace emovc::converter
