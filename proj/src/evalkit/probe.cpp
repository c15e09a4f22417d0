// SPDX-License-Identifier: Apache-2.0
#include "emovc/evalkit/probe.hpp"

#include <random>

#include "emovc/error.hpp"
#include "emovc/model/losses.hpp"
#include "emovc/ndgrad/ops.hpp"
#include "emovc/ndgrad/optim.hpp"

namespace emovc::evalkit {

using nd::Tensor;

void ProbeConfig::validate() const {
  auto bad = [](const std::string& m) { fail(ErrorCode::configuration, "probe config: " + m); };
  if (crop_width == 0 || crop_width % 32 != 0) bad("crop_width must be a positive multiple of 32");
  if (batch_size < 1 || steps < 1) bad("batch_size and steps must be positive");
  if (!(learning_rate > 0) || !(rho > 0 && rho <= 4)) bad("learning_rate and rho must be positive");
}

Probe::Probe(std::string emotion_a, std::string emotion_b, ProbeConfig cfg)
    : a_(std::move(emotion_a)), b_(std::move(emotion_b)), cfg_(cfg) {
  cfg_.validate();
  require(a_ != b_, "probe needs two distinct emotions");
  net_ = std::make_shared<model::ClassifierNet>(cfg_.rho, model::FeatureLayout::for_combo(cfg_.combo).height(),
                                                cfg_.crop_width, cfg_.seed);
}

namespace {

// Standardised height x frames matrix of one utterance.
Matrix standardised(const dsp::FeatureSet& fs, const converter::CorpusStats& stats) {
  const auto s = converter::assemble(fs, stats);
  Matrix m(s.height(), fs.frames());
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t t = 0; t < m.cols; ++t) m(r, t) = s.data.at(r * s.width() + t);
  return m;
}

void put_crop(const Matrix& m, std::size_t offset, std::size_t width, double* dst) {
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < width; ++c) dst[r * width + c] = m(r, (offset + c) % m.cols);
}

}  // namespace

void Probe::fit(const std::vector<dsp::FeatureSet>& a, const std::vector<dsp::FeatureSet>& b) {
  if (a.empty() || b.empty()) fail(ErrorCode::degenerate, "probe training needs utterances of both emotions");
  std::vector<corpus::Utterance> utts;
  for (const auto* side : {&a, &b})
    for (const auto& fs : *side) {
      if (fs.provenance == "eval" || fs.provenance == "converted")
        fail(ErrorCode::contract_violation, "probe training received features tagged '" + fs.provenance + "'");
      // compute_stats pools "train" frames; the probe's own statistics cover all its genuine inputs.
      corpus::Utterance u{{side == &a ? a_ : b_, "train", "", ""}, fs};
      u.features.provenance = "train";
      utts.push_back(std::move(u));
    }
  stats_ = corpus::compute_stats(utts, cfg_.combo, {a_, b_});
  std::vector<Matrix> pa, pb;
  for (const auto& fs : a) pa.push_back(standardised(fs, stats_));
  for (const auto& fs : b) pb.push_back(standardised(fs, stats_));

  const std::size_t h = pa.front().rows, w = cfg_.crop_width, item = h * w;
  nd::Adam opt(net_->parameter_tensors(), {cfg_.learning_rate});
  std::mt19937_64 rng(cfg_.seed);
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  for (std::size_t step = 0; step < cfg_.steps; ++step) {
    // Half of each batch from either class.
    std::vector<double> data(cfg_.batch_size * item), labels(cfg_.batch_size);
    for (std::size_t i = 0; i < cfg_.batch_size; ++i) {
      const bool is_b = i % 2 == 1;
      const auto& pool = is_b ? pb : pa;
      const Matrix& m = pool[pick(pool.size())];
      const std::size_t off = m.cols > w ? pick(m.cols - w + 1) : pick(m.cols);
      put_crop(m, off, w, data.data() + i * item);
      labels[i] = is_b ? model::kLabelB : model::kLabelA;
    }
    const Tensor x = Tensor::from({cfg_.batch_size, 1, h, w}, std::move(data));
    const Tensor loss = nd::bce_loss(net_->forward(x), Tensor::from({cfg_.batch_size}, std::move(labels)));
    opt.zero_grad();
    nd::backward(loss);
    opt.step();
  }
  fitted_ = true;
}

void Probe::zero() {
  for (auto t : net_->parameter_tensors()) std::fill(t.mutable_data().begin(), t.mutable_data().end(), 0.0);
  if (stats_.rows.mean.empty()) {
    const std::size_t h = model::FeatureLayout::for_combo(cfg_.combo).height();
    stats_.combo = cfg_.combo;
    stats_.rows.mean.assign(h, 0.0);
    stats_.rows.std.assign(h, 1.0);
  }
  fitted_ = true;
}

double Probe::prob_b(const dsp::FeatureSet& fs) const {
  require(fitted_, "probe used before fitting");
  const Matrix m = standardised(fs, stats_);
  const std::size_t w = cfg_.crop_width, item = m.rows * w;
  const std::size_t crops = std::max<std::size_t>(1, m.cols / w);
  // Evenly spaced crops across the utterance (loop-padded when it is short).
  std::vector<double> data(crops * item);
  for (std::size_t k = 0; k < crops; ++k) {
    const std::size_t off = crops > 1 ? k * (m.cols - w) / (crops - 1) : 0;
    put_crop(m, off, w, data.data() + k * item);
  }
  nd::NoGradGuard guard;
  const Tensor p = net_->forward(Tensor::from({crops, 1, m.rows, w}, std::move(data)));
  double s = 0.0;
  for (double v : p.data()) s += v;
  return s / static_cast<double>(crops);
}

std::string Probe::classify(const dsp::FeatureSet& fs) const { return prob_b(fs) > 0.5 ? b_ : a_; }

double Probe::rate(const std::vector<dsp::FeatureSet>& utts, const std::string& emotion) const {
  require(!utts.empty(), "probe rate of an empty set");
  std::size_t hits = 0;
  for (const auto& fs : utts) hits += classify(fs) == emotion;
  return static_cast<double>(hits) / static_cast<double>(utts.size());
}

Probe train_probe(const corpus::CorpusManifest& m, const std::string& emotion_a, const std::string& emotion_b,
                  const ProbeConfig& cfg, const dsp::AnalysisConfig& analysis) {
  std::vector<dsp::FeatureSet> a, b;
  for (auto& u : corpus::load_utterances(m, {emotion_a, emotion_b}, {"train", "val"}, analysis))
    (u.entry.emotion == emotion_a ? a : b).push_back(std::move(u.features));
  Probe p(emotion_a, emotion_b, cfg);
  p.fit(a, b);
  return p;
}

}  // namespace emovc::evalkit
