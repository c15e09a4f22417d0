// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "emovc/model/layout.hpp"
#include "emovc/model/networks.hpp"

namespace emovc::model {

/// The five networks of the emotional CycleGAN.
struct CycleGanModels {
  GeneratorNet g_ab;
  GeneratorNet g_ba;
  DiscriminatorNet d_a;
  DiscriminatorNet d_b;
  ClassifierNet classifier;

  /// Discriminators and classifier are sized for [height x crop_width] inputs.
  CycleGanModels(double rho, std::size_t height, std::size_t crop_width, std::uint64_t seed);

  std::vector<nd::NamedTensor> parameters() const;
};

/// Applies a generator to S, preserving shape, layout and stats.
FeatureTensor generator_forward(const GeneratorNet& g, const FeatureTensor& s);

/// One probability in (0,1) per batch item; W must be a multiple of 32.
nd::Tensor discriminate(const DiscriminatorNet& d, const FeatureTensor& s);

}  // namespace emovc::model
