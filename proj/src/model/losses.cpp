// SPDX-License-Identifier: Apache-2.0
#include "emovc/model/losses.hpp"

#include "emovc/error.hpp"
#include "emovc/ndgrad/ops.hpp"

namespace emovc::model {

using nd::Tensor;

void LossWeights::validate() const {
  require(lambda1 >= 0.0 && lambda2 >= 0.0, "loss weights lambda1 and lambda2 must be non-negative");
}

Tensor adversarial_loss(const Tensor& d_real, const Tensor& d_fake) {
  return nd::add(nd::gan_log(d_real), nd::gan_log_complement(d_fake));
}

Tensor cycle_loss(const Tensor& s_a, const Tensor& s_aba, const Tensor& s_b, const Tensor& s_bab) {
  return nd::add(nd::l1_loss(s_aba, s_a), nd::l1_loss(s_bab, s_b));
}

namespace {
Tensor bce_to(const Tensor& p, double label) { return nd::bce_loss(p, Tensor::full(p.shape(), label)); }
}  // namespace

Tensor emotion_loss(const EmotionOutputs& c) {
  Tensor emo_a = nd::add(nd::add(bce_to(c.a, kLabelA), bce_to(c.ab, kLabelB)), bce_to(c.aba, kLabelA));
  Tensor emo_b = nd::add(nd::add(bce_to(c.b, kLabelB), bce_to(c.ba, kLabelA)), bce_to(c.bab, kLabelB));
  return nd::add(emo_a, emo_b);
}

Tensor full_objective(const Tensor& adv_ab, const Tensor& adv_ba, const Tensor& cyc, const Tensor& emo,
                      const LossWeights& w) {
  w.validate();
  for (const Tensor* t : {&adv_ab, &adv_ba, &cyc, &emo})
    require(t->size() == 1, "full_objective: components must be scalars");
  Tensor adv = nd::add(adv_ab, adv_ba);
  return nd::add(nd::add(adv, nd::scale(cyc, w.lambda1)), nd::scale(emo, w.lambda2));
}

}  // namespace emovc::model
