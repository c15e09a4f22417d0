// SPDX-License-Identifier: Apache-2.0
//
// Non-parallel CycleGAN training: source and target crops are drawn
// independently, with no alignment between them.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "emovc/common/matrix.hpp"
#include "emovc/converter/bundle.hpp"
#include "emovc/corpus/corpus.hpp"
#include "emovc/model/losses.hpp"
#include "emovc/ndgrad/optim.hpp"

namespace emovc::trainer {

struct TrainingConfig {
  model::LossWeights weights;
  std::size_t crop_width = 128;
  std::size_t batch_size = 8;
  double lr_g = 2e-4;
  double lr_d = 1e-4;  // discriminators and classifier
  std::size_t steps = 2000;
  std::uint64_t seed = 7;
  std::size_t checkpoint_interval = 500;  // 0 disables intermediate checkpoints
  double rho = 0.25;
  // Updates per step for D, C and G; 0 freezes that network.
  std::size_t d_updates = 1, c_updates = 1, g_updates = 1;

  void validate() const;
};

struct LossRecord {
  std::uint64_t step = 0;
  double adv_ab = 0, adv_ba = 0, cyc = 0, emo = 0, full = 0, d_acc = 0;
  bool operator==(const LossRecord&) const = default;
};

/// Draws source and target crops independently and uniformly. Pools hold
/// standardised utterances (height x frames).
class PairSampler {
 public:
  struct Draw {
    std::size_t a = 0, b = 0;
    std::size_t offset_a = 0, offset_b = 0;
  };

  PairSampler(std::vector<Matrix> pool_a, std::vector<Matrix> pool_b, std::uint64_t seed = 0);

  void reseed(std::uint64_t seed) { rng_.seed(seed); }
  Draw draw(std::size_t crop_width);
  /// [batch,1,H,crop] tensors for both sides.
  std::pair<nd::Tensor, nd::Tensor> sample(std::size_t crop_width, std::size_t batch, std::vector<Draw>* draws = nullptr);

  std::size_t size_a() const { return pool_a_.size(); }
  std::size_t size_b() const { return pool_b_.size(); }

 private:
  std::vector<Matrix> pool_a_, pool_b_;
  std::mt19937_64 rng_;
};

/// Columns [offset, offset + width) of m, wrapping around (loop padding).
Matrix crop_columns(const Matrix& m, std::size_t offset, std::size_t width);

/// Networks plus their three optimisers.
class Trainer {
 public:
  Trainer(const TrainingConfig& cfg, std::size_t height);

  /// One D / C / G round on the given batches (labels: a = 0, b = 1).
  LossRecord step(const nd::Tensor& batch_a, const nd::Tensor& batch_b);

  const TrainingConfig& config() const { return cfg_; }
  model::CycleGanModels& models() { return *models_; }
  const std::shared_ptr<model::CycleGanModels>& shared_models() const { return models_; }
  std::uint64_t steps_done() const { return step_; }

  /// Optimiser moments and the step counter, for checkpoints.
  std::vector<nd::NamedTensor> optimizer_tensors() const;
  /// Restores parameters, optimiser state and step from a checkpoint.
  void restore(const nd::Checkpoint& ckpt);

 private:
  TrainingConfig cfg_;
  std::shared_ptr<model::CycleGanModels> models_;
  nd::Adam opt_g_, opt_d_, opt_c_;
  std::uint64_t step_ = 0;
};

LossRecord train_step(Trainer& trainer, const nd::Tensor& batch_a, const nd::Tensor& batch_b);

struct TrainRun {
  std::filesystem::path out_dir;  // checkpoints/, losses.csv, model.ckpt
  std::string emotion_a = "neutral";
  std::string emotion_b = "angry";
  model::FeatureCombo combo = model::FeatureCombo::mcc_lf0cwt_lecwt;
  std::uint64_t config_hash = 0;
  bool resume = false;
  dsp::AnalysisConfig analysis;
  std::function<void(const LossRecord&)> on_step;  // optional progress hook
};

inline const char* kLossCsvHeader = "step,adv_ab,adv_ba,cyc,emo,full,d_acc";

void write_loss_row(std::ostream& os, const LossRecord& r);
std::vector<LossRecord> read_loss_csv(const std::filesystem::path& path);

/// Full training run on the corpus' training split. Checkpoints every
/// `checkpoint_interval` steps and at the end; losses.csv gets one row per step.
converter::ModelBundle train(const corpus::CorpusManifest& corpus, const TrainingConfig& cfg, const TrainRun& run);

}  // namespace emovc::trainer
