// SPDX-License-Identifier: Apache-2.0
//
// Value-level CycleGAN objectives. Every function returns a differentiable
// scalar tensor; who ascends or descends which term is decided by the trainer.
#pragma once

#include <array>

#include "emovc/ndgrad/tensor.hpp"

namespace emovc::model {

struct LossWeights {
  double lambda1 = 10.0;  // cycle consistency
  double lambda2 = 1.0;   // emotion classification
  void validate() const;
};

inline constexpr double kLabelA = 0.0;
inline constexpr double kLabelB = 1.0;

/// E[log D(real)] + E[log(1 - D(fake))] over per-item probabilities.
nd::Tensor adversarial_loss(const nd::Tensor& d_real, const nd::Tensor& d_fake);

/// mean|S_ABA - S_A| + mean|S_BAB - S_B|.
nd::Tensor cycle_loss(const nd::Tensor& s_a, const nd::Tensor& s_aba, const nd::Tensor& s_b, const nd::Tensor& s_bab);

/// Classifier probabilities in the order S_A, S_AB, S_ABA, S_B, S_BA, S_BAB.
struct EmotionOutputs {
  nd::Tensor a, ab, aba, b, ba, bab;
};

/// Sum of six BCE terms against labels A, B, A, B, A, B respectively.
nd::Tensor emotion_loss(const EmotionOutputs& c);

/// adv_ab + adv_ba + lambda1 * cyc + lambda2 * emo.
nd::Tensor full_objective(const nd::Tensor& adv_ab, const nd::Tensor& adv_ba, const nd::Tensor& cyc,
                          const nd::Tensor& emo, const LossWeights& w);

}  // namespace emovc::model
