// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include "doctest.h"
#include "emovc/error.hpp"
#include "emovc/model/cyclegan.hpp"
#include "emovc/model/losses.hpp"
#include "emovc/ndgrad/ops.hpp"
#include "support/gradcheck.hpp"

using namespace emovc;
using namespace emovc::model;
using nd::Tensor;
using emovc::testing::grad_check;
using emovc::testing::random_tensor;

namespace {

FeatureTensor random_features(FeatureCombo combo, std::size_t batch, std::size_t width, std::mt19937_64& rng) {
  FeatureTensor s;
  s.layout = FeatureLayout::for_combo(combo);
  s.data = random_tensor({batch, 1, s.layout.height(), width}, rng, 1.0, false);
  return s;
}

void fill(const Tensor& t, double v) {
  Tensor m = t;
  for (auto& x : m.mutable_data()) x = v;
}

}  // namespace

TEST_CASE("layout heights per combination") {
  CHECK(FeatureLayout::for_combo(FeatureCombo::mcc).height() == 40);
  CHECK(FeatureLayout::for_combo(FeatureCombo::mcc_lf0).height() == 40);
  CHECK(FeatureLayout::for_combo(FeatureCombo::mcc_lf0cwt).height() == 48);
  const auto full = FeatureLayout::for_combo(FeatureCombo::mcc_lf0cwt_lecwt);
  CHECK(full.height() == 56);
  CHECK_FALSE(full.has("pad"));
  const auto* lecwt = full.find("lecwt");
  REQUIRE(lecwt);
  CHECK(lecwt->begin == 46);
  CHECK(lecwt->end == 56);
  for (auto c : all_combos()) CHECK(parse_combo(combo_name(c)) == c);
  CHECK_THROWS_AS(parse_combo("mcc+f0"), Error);
}

TEST_CASE("generator preserves shape and discriminators emit one probability") {
  std::mt19937_64 rng(3);
  GeneratorNet g(0.0625, 11);
  for (auto combo : all_combos())
    for (std::size_t w : {32u, 64u, 128u}) {
      auto s = random_features(combo, 1, w, rng);
      auto out = generator_forward(g, s);
      CHECK(out.data.shape() == s.data.shape());
      CHECK(out.layout.height() == s.layout.height());
      DiscriminatorNet d(0.0625, s.height(), w, 5);
      auto p = discriminate(d, s);
      REQUIRE(p.shape() == nd::Shape{1});
      CHECK(p.item() > 0.0);
      CHECK(p.item() < 1.0);
    }
}

TEST_CASE("discriminator head spans ceil(H/32) x ceil(W/32)") {
  DiscriminatorNet d(0.0625, 56, 128, 1);
  CHECK(d.head_extent() == std::pair<std::size_t, std::size_t>{2, 4});
  DiscriminatorNet d2(0.0625, 64, 128, 1);
  CHECK(d2.head_extent() == std::pair<std::size_t, std::size_t>{2, 4});
  std::mt19937_64 rng(2);
  FeatureTensor s;
  s.layout = FeatureLayout::for_combo(FeatureCombo::mcc);
  s.data = random_tensor({1, 1, 40, 48}, rng);
  DiscriminatorNet d3(0.0625, 40, 48, 1);
  CHECK_THROWS_AS(discriminate(d3, s), Error);
}

TEST_CASE("generator rejects indivisible extents") {
  GeneratorNet g(0.0625, 1);
  CHECK_THROWS_AS(g.forward(Tensor::zeros({1, 1, 38, 32})), Error);
  CHECK_THROWS_AS(g.forward(Tensor::zeros({1, 1, 40, 30})), Error);
}

TEST_CASE("fresh generator gives finite output on zero input") {
  GeneratorNet g(0.25, 7);
  auto y = g.forward(Tensor::zeros({1, 1, 56, 128}));
  CHECK(y.shape() == nd::Shape{1, 1, 56, 128});
  for (double v : y.data()) REQUIRE(std::isfinite(v));
}

TEST_CASE("zeroed residual branch is the identity") {
  GeneratorNet g(0.0625, 9);
  g.zero_residual_branches();
  std::mt19937_64 rng(4);
  auto x = random_tensor({2, g.residual_channels(), 4, 6}, rng);
  for (std::size_t i = 0; i < GeneratorNet::kResidualBlocks; ++i) {
    auto y = g.residual_block(i, x);
    for (std::size_t k = 0; k < x.size(); ++k) REQUIRE(y.at(k) == x.at(k));
  }
}

TEST_CASE("zero-weight discriminator outputs 0.5") {
  DiscriminatorNet d(0.0625, 40, 64, 3);
  for (const auto& p : d.parameters("d")) fill(p.tensor, 0.0);
  std::mt19937_64 rng(8);
  auto p = d.forward(random_tensor({3, 1, 40, 64}, rng));
  for (double v : p.data()) CHECK(v == 0.5);
}

TEST_CASE("discriminator gradients match finite differences") {
  std::mt19937_64 rng(12);
  DiscriminatorNet d(0.0625, 40, 32, 21);
  auto x = random_tensor({2, 1, 40, 32}, rng);
  auto params = d.parameter_tensors();
  params.push_back(x);
  auto r = grad_check([&] { return nd::gan_log(d.forward(x)); }, params, 6, 1e-6, 1, 1e-6);
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("generator gradients match finite differences") {
  std::mt19937_64 rng(13);
  GeneratorNet g(0.0625, 17);
  auto x = random_tensor({1, 1, 8, 8}, rng);
  auto target = random_tensor({1, 1, 8, 8}, rng, 1.0, false);
  auto r = grad_check([&] { return nd::l1_loss(g.forward(x), target); }, g.parameter_tensors(), 3, 1e-5, 1, 1e-6);
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("every generator parameter receives gradient from the full objective") {
  std::mt19937_64 rng(14);
  CycleGanModels m(0.0625, 40, 32, 5);
  auto a = random_tensor({1, 1, 40, 32}, rng, 1.0, false);
  auto b = random_tensor({1, 1, 40, 32}, rng, 1.0, false);
  auto ab = m.g_ab.forward(a), ba = m.g_ba.forward(b);
  auto aba = m.g_ba.forward(ab), bab = m.g_ab.forward(ba);
  auto adv_ab = adversarial_loss(m.d_b.forward(b), m.d_b.forward(ab));
  auto adv_ba = adversarial_loss(m.d_a.forward(a), m.d_a.forward(ba));
  auto cyc = cycle_loss(a, aba, b, bab);
  EmotionOutputs c{m.classifier.forward(a), m.classifier.forward(ab), m.classifier.forward(aba),
                   m.classifier.forward(b), m.classifier.forward(ba), m.classifier.forward(bab)};
  auto full = full_objective(adv_ab, adv_ba, cyc, emotion_loss(c), LossWeights{});
  nd::backward(full);
  for (const auto* g : {&m.g_ab, &m.g_ba})
    for (const auto& p : g->parameters("g")) {
      REQUIRE(p.tensor.has_grad());
      std::size_t nonzero = 0;
      for (double v : p.tensor.grad()) nonzero += v != 0.0;
      CHECK_MESSAGE(nonzero > 0, p.name);
    }
}

TEST_CASE("loss oracles") {
  const Tensor half = Tensor::full({1}, 0.5);
  CHECK(adversarial_loss(half, half).item() == doctest::Approx(2.0 * std::log(0.5)).epsilon(1e-14));
  CHECK(std::abs(adversarial_loss(Tensor::full({1}, 1.0), Tensor::full({1}, 0.0)).item()) < 1e-6);
  EmotionOutputs c{half, half, half, half, half, half};
  CHECK(std::abs(emotion_loss(c).item() - 6.0 * std::log(2.0)) < 1e-12);
  EmotionOutputs perfect{Tensor::full({1}, 0.0), Tensor::full({1}, 1.0), Tensor::full({1}, 0.0),
                         Tensor::full({1}, 1.0), Tensor::full({1}, 0.0), Tensor::full({1}, 1.0)};
  CHECK(emotion_loss(perfect).item() < 1e-5);
  EmotionOutputs swapped{perfect.b, perfect.ba, perfect.bab, perfect.a, perfect.ab, perfect.aba};
  CHECK(emotion_loss(swapped).item() > 10.0);

  std::mt19937_64 rng(1);
  auto a = random_tensor({2, 1, 4, 4}, rng, 1.0, false);
  auto b = random_tensor({2, 1, 4, 4}, rng, 1.0, false);
  CHECK(cycle_loss(a, a, b, b).item() == 0.0);
  CHECK(cycle_loss(a, nd::add_scalar(a, 1.0), b, b).item() == doctest::Approx(1.0).epsilon(1e-14));
  auto a2 = random_tensor({2, 1, 4, 4}, rng, 1.0, false);
  auto b2 = random_tensor({2, 1, 4, 4}, rng, 1.0, false);
  CHECK(cycle_loss(a, a2, b, b2).item() == doctest::Approx(cycle_loss(b, b2, a, a2).item()).epsilon(1e-15));

  auto s = [](double v) { return Tensor::scalar(v); };
  CHECK(full_objective(s(-1), s(-1), s(2), s(3), LossWeights{10.0, 1.0}).item() == 21.0);
  CHECK(full_objective(s(-1), s(-1), s(2), s(3), LossWeights{0.0, 0.0}).item() == -2.0);
  CHECK_THROWS_AS(full_objective(s(0), s(0), s(0), s(0), LossWeights{-1.0, 0.0}), Error);
}

TEST_CASE("batched adversarial loss equals scalar-loop oracle") {
  const std::vector<double> real{0.9, 0.2, 0.65, 0.5, 0.01}, fake{0.3, 0.8, 0.11, 0.5, 0.99};
  double oracle = 0.0;
  for (std::size_t i = 0; i < real.size(); ++i) oracle += std::log(real[i]) + std::log(1.0 - fake[i]);
  oracle /= static_cast<double>(real.size());
  auto v = adversarial_loss(Tensor::from({5}, real), Tensor::from({5}, fake)).item();
  CHECK(std::abs(v - oracle) < 1e-12);
}
