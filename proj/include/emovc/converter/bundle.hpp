// SPDX-License-Identifier: Apache-2.0
//
// A trained model together with everything conversion needs: the five
// networks, the corpus normalisation statistics, the emotion labels and the
// architecture parameters. Stored as a checkpoint file.
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "emovc/converter/assemble.hpp"
#include "emovc/model/cyclegan.hpp"
#include "emovc/ndgrad/checkpoint.hpp"

namespace emovc::converter {

struct ModelBundle {
  std::shared_ptr<model::CycleGanModels> models;
  CorpusStats stats;
  std::string emotion_a;  // source side of G_AB
  std::string emotion_b;
  double rho = 0.25;
  std::size_t crop_width = 128;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  std::uint64_t config_hash = 0;

  model::FeatureCombo combo() const { return stats.combo; }
  std::size_t height() const { return model::FeatureLayout::for_combo(stats.combo).height(); }

  /// Parameters, statistics and metadata as named tensors.
  std::vector<nd::NamedTensor> tensors() const;
  nd::Checkpoint to_checkpoint() const;
  /// Rebuilds the bundle; extra entries (optimizer state) are ignored.
  static ModelBundle from_checkpoint(const nd::Checkpoint& ckpt);
};

void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle);
ModelBundle load_bundle(const std::filesystem::path& path);

}  // namespace emovc::converter
