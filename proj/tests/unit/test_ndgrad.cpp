// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "doctest.h"
#include "support/errors.hpp"
#include "emovc/error.hpp"
#include "emovc/ndgrad/checkpoint.hpp"
#include "emovc/ndgrad/ops.hpp"
#include "emovc/ndgrad/optim.hpp"
#include "support/gradcheck.hpp"

using namespace emovc;
using emovc::testing::code_of;
using namespace emovc::nd;
using emovc::testing::grad_check;
using emovc::testing::random_tensor;

namespace {

ConvSpec spec(std::size_t kh, std::size_t kw, std::size_t cin, std::size_t cout, std::size_t stride = 1,
              Padding pad = {}) {
  return ConvSpec{kh, kw, cin, cout, stride, pad};
}

}  // namespace

TEST_CASE("conv2d direct arithmetic") {
  auto x = Tensor::from({1, 1, 2, 2}, {1, 2, 3, 4});
  auto w = Tensor::full({1, 1, 2, 2}, 1.0);
  auto y = conv2d(x, spec(2, 2, 1, 1), w, Tensor());
  REQUIRE(y.shape() == Shape{1, 1, 1, 1});
  CHECK(y.item() == 10.0);
}

TEST_CASE("conv2d with 1x1 identity kernel is the identity") {
  std::mt19937_64 rng(3);
  auto x = random_tensor({2, 1, 5, 7}, rng, 1.0, false);
  auto y = conv2d(x, spec(1, 1, 1, 1), Tensor::full({1, 1, 1, 1}, 1.0), Tensor());
  REQUIRE(y.shape() == x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y.at(i) == x.at(i));
}

TEST_CASE("conv2d output shape for the generator input block") {
  auto x = Tensor::zeros({1, 1, 36, 128});
  auto s = spec(3, 9, 1, 64, 1, {1, 1, 4, 4});
  auto y = conv2d(x, s, Tensor::zeros(s.weight_shape()), Tensor::zeros({64}));
  CHECK(y.shape() == Shape{1, 64, 36, 128});
}

TEST_CASE("conv2d contract violations name the dimension") {
  auto s = spec(3, 3, 2, 4);
  auto x = Tensor::zeros({1, 3, 8, 8});
  try {
    conv2d(x, s, Tensor::zeros(s.weight_shape()), Tensor());
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::contract_violation);
    CHECK(std::string(e.what()).find("channel") != std::string::npos);
  }
  auto small = Tensor::zeros({1, 2, 2, 2});
  CHECK(code_of([&] { conv2d(small, s, Tensor::zeros(s.weight_shape()), Tensor()); }) ==
        ErrorCode::contract_violation);
  CHECK(code_of([&] { conv2d(Tensor::zeros({1, 2, 8, 8}), s, Tensor::zeros({4, 2, 3, 2}), Tensor()); }) ==
        ErrorCode::contract_violation);
}

TEST_CASE("conv_transpose2d shapes and scalar product") {
  auto s = spec(4, 4, 256, 128, 2, Padding::uniform(1));
  auto y = conv_transpose2d(Tensor::zeros({1, 256, 14, 32}), s, Tensor::zeros(s.weight_shape(true)), Tensor());
  CHECK(y.shape() == Shape{1, 128, 28, 64});

  auto v = conv_transpose2d(Tensor::from({1, 1, 1, 1}, {3.0}), spec(1, 1, 1, 1), Tensor::from({1, 1, 1, 1}, {-2.5}),
                            Tensor());
  CHECK(v.item() == -7.5);
}

TEST_CASE("conv_transpose2d is the adjoint of conv2d") {
  // <conv(x), y> == <x, convT(y)> for matching geometry.
  std::mt19937_64 rng(11);
  auto s = spec(4, 8, 3, 5, 2, {1, 1, 3, 3});
  auto x = random_tensor({2, 3, 8, 16}, rng, 1.0, false);
  auto w = random_tensor(s.weight_shape(), rng, 1.0, false);
  auto y = random_tensor({2, 5, 4, 8}, rng, 1.0, false);
  auto cx = conv2d(x, s, w, Tensor());
  REQUIRE(cx.shape() == y.shape());
  ConvSpec ts{4, 8, 5, 3, 2, {1, 1, 3, 3}};
  auto wt = Tensor::from(ts.weight_shape(true), std::vector<double>(w.data().begin(), w.data().end()));
  auto ty = conv_transpose2d(y, ts, wt, Tensor());
  REQUIRE(ty.shape() == x.shape());
  double lhs = 0, rhs = 0;
  for (std::size_t i = 0; i < cx.size(); ++i) lhs += cx.at(i) * y.at(i);
  for (std::size_t i = 0; i < x.size(); ++i) rhs += x.at(i) * ty.at(i);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("conv_transpose2d gradient matches finite differences (linear op)") {
  std::mt19937_64 rng(5);
  auto s = spec(4, 4, 3, 2, 2, Padding::uniform(1));
  auto x = random_tensor({2, 3, 3, 4}, rng);
  auto w = random_tensor(s.weight_shape(true), rng);
  auto b = random_tensor({2}, rng);
  auto r = grad_check([&] { return sum(conv_transpose2d(x, s, w, b)); }, {x, w, b});
  CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("conv2d gradient matches finite differences (linear op)") {
  std::mt19937_64 rng(6);
  auto s = spec(3, 5, 2, 3, 2, {1, 2, 2, 1});
  auto x = random_tensor({2, 2, 7, 9}, rng);
  auto w = random_tensor(s.weight_shape(), rng);
  auto b = random_tensor({3}, rng);
  auto probe = random_tensor({2, 3, 4, 4}, rng, 1.0, false);
  auto r = grad_check([&] { return sum(mul(conv2d(x, s, w, b), probe)); }, {x, w, b});
  CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("instance_norm examples") {
  auto one = Tensor::full({1}, 1.0), zero = Tensor::full({1}, 0.0);
  auto y = instance_norm(Tensor::from({1, 1, 2, 2}, {1, 2, 3, 4}), one, zero, 0.0);
  const double expect[] = {-1.3416, -0.4472, 0.4472, 1.3416};
  for (int i = 0; i < 4; ++i) CHECK(y.at(i) == doctest::Approx(expect[i]).epsilon(1e-4));

  auto c = instance_norm(Tensor::full({1, 1, 3, 3}, 7.0), one, zero);
  for (double v : c.data()) CHECK(v == 0.0);

  std::mt19937_64 rng(2);
  auto x = random_tensor({2, 3, 4, 5}, rng, 1.0, false);
  auto k = instance_norm(x, Tensor::zeros({3}), Tensor::full({3}, -2.5));
  for (double v : k.data()) CHECK(v == -2.5);

  CHECK(code_of([&] { instance_norm(Tensor::zeros({1, 1, 1, 1}), one, zero); }) == ErrorCode::degenerate);
}

TEST_CASE("instance_norm slices are standardised") {
  std::mt19937_64 rng(8);
  const double eps = 1e-5;
  for (int trial = 0; trial < 10; ++trial) {
    auto x = random_tensor({2, 4, 3, 7}, rng, 0.5 + trial, false);
    auto y = instance_norm(x, Tensor::full({4}, 1.0), Tensor::zeros({4}), eps);
    for (std::size_t s = 0; s < 8; ++s) {
      double m = 0, v = 0;
      for (std::size_t i = 0; i < 21; ++i) m += y.at(s * 21 + i);
      m /= 21;
      for (std::size_t i = 0; i < 21; ++i) v += (y.at(s * 21 + i) - m) * (y.at(s * 21 + i) - m);
      v /= 21;
      CHECK(std::abs(m) < 1e-9);
      CHECK(std::abs(v - 1.0) < 10 * eps);
    }
  }
}

TEST_CASE("activation values") {
  auto x = Tensor::from({4}, {-3, 3, -1, 0});
  auto r = relu(x);
  CHECK(r.at(0) == 0.0);
  CHECK(r.at(1) == 3.0);
  CHECK(leaky_relu(x, 0.01).at(2) == doctest::Approx(-0.01).epsilon(1e-15));
  CHECK(sigmoid(Tensor::scalar(0.0)).item() == 0.5);
  CHECK(code_of([&] { leaky_relu(x, 1.5); }) == ErrorCode::contract_violation);
}

TEST_CASE("relu subgradient at zero is one") {
  auto x = Tensor::from({2}, {0.0, -0.0}, true);
  backward(sum(relu(x)));
  CHECK(x.grad()[0] == 1.0);
  CHECK(x.grad()[1] == 1.0);
}

TEST_CASE("loss examples") {
  auto x = Tensor::from({3}, {1, -2, 5});
  CHECK(l1_loss(x, x).item() == 0.0);
  CHECK(bce_loss(Tensor::scalar(0.5), Tensor::scalar(1.0)).item() == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(l1_loss(Tensor::from({2}, {1, 2}), Tensor::from({2}, {2, 4})).item() == 1.5);
  CHECK(gan_log(Tensor::scalar(0.5)).item() == doctest::Approx(std::log(0.5)));
  // Saturated probabilities stay finite through the clamp.
  CHECK(std::isfinite(bce_loss(Tensor::scalar(0.0), Tensor::scalar(1.0)).item()));
  CHECK(std::isfinite(gan_log_complement(Tensor::scalar(1.0)).item()));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK(code_of([&] { l1_loss(Tensor::scalar(nan), Tensor::scalar(0)); }) == ErrorCode::non_finite);
  CHECK(code_of([&] { bce_loss(Tensor::scalar(0.5), Tensor::scalar(INFINITY)); }) == ErrorCode::non_finite);
}

TEST_CASE("backward basics") {
  auto x = Tensor::from({3}, {1.5, -2.0, 0.25}, true);
  backward(sum(square(x)));
  for (std::size_t i = 0; i < 3; ++i) CHECK(x.grad()[i] == 2.0 * x.at(i));

  // Documented accumulation across calls without reset.
  auto l = sum(square(x));
  backward(l);
  for (std::size_t i = 0; i < 3; ++i) CHECK(x.grad()[i] == 4.0 * x.at(i));
  x.zero_grad();
  backward(l);
  for (std::size_t i = 0; i < 3; ++i) CHECK(x.grad()[i] == 2.0 * x.at(i));

  auto c = Tensor::from({2}, {1, 2});
  CHECK(code_of([&] { backward(sum(square(c))); }) == ErrorCode::contract_violation);
  CHECK(code_of([&] { backward(square(x)); }) == ErrorCode::contract_violation);
}

TEST_CASE("detached tensors receive no gradient") {
  auto x = Tensor::from({2}, {1, 2}, true);
  auto d = square(x).detach();
  auto y = Tensor::from({2}, {3, 4}, true);
  backward(sum(mul(d, y)));
  CHECK_FALSE(x.has_grad());
  CHECK(y.grad()[0] == 1.0);
}

TEST_CASE("NoGradGuard suppresses graph recording") {
  auto x = Tensor::from({2}, {1, 2}, true);
  NoGradGuard guard;
  auto y = sum(square(x));
  CHECK_FALSE(y.requires_grad());
}

TEST_CASE("random-input gradient checks for every differentiable op") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 3; ++trial) {
    auto x = random_tensor({2, 3, 4, 5}, rng);
    auto g = random_tensor({3}, rng);
    auto b = random_tensor({3}, rng);
    auto probe = random_tensor({2, 3, 4, 5}, rng, 1.0, false);
    CHECK(grad_check([&] { return sum(mul(instance_norm(x, g, b), probe)); }, {x, g, b}).max_rel_error < 1e-4);
    CHECK(grad_check([&] { return sum(mul(leaky_relu(x, 0.2), probe)); }, {x}).max_rel_error < 1e-4);
    CHECK(grad_check([&] { return sum(mul(relu(x), probe)); }, {x}).max_rel_error < 1e-4);
    CHECK(grad_check([&] { return sum(mul(sigmoid(x), probe)); }, {x}).max_rel_error < 1e-4);

    auto p = Tensor::from({6}, {0.1, 0.3, 0.5, 0.7, 0.9, 0.2}, true);
    auto t = Tensor::from({6}, {0, 1, 1, 0, 1, 0});
    CHECK(grad_check([&] { return bce_loss(p, t); }, {p}).max_rel_error < 1e-4);
    CHECK(grad_check([&] { return gan_log(p); }, {p}).max_rel_error < 1e-4);
    CHECK(grad_check([&] { return gan_log_complement(p); }, {p}).max_rel_error < 1e-4);
    auto q = random_tensor({6}, rng);
    CHECK(grad_check([&] { return l1_loss(q, t); }, {q}).max_rel_error < 1e-4);
    auto a = random_tensor({2, 3}, rng), c = random_tensor({2, 3}, rng);
    CHECK(grad_check([&] { return mean(mul(add(a, scale(c, -0.5)), sub(c, add_scalar(a, 1.0)))); }, {a, c})
              .max_rel_error < 1e-4);
    CHECK(grad_check([&] { return sum(square(reshape(concat_batch({slice_batch(a, 1, 2), c}), {9}))); }, {a, c})
              .max_rel_error < 1e-4);
  }
}

TEST_CASE("Adam update rule") {
  SUBCASE("zero gradient from fresh state leaves parameters unchanged") {
    auto p = Tensor::from({3}, {1, -2, 3}, true);
    p.mutable_grad();
    Adam opt({p}, {});
    REQUIRE(opt.step());
    CHECK(p.at(0) == 1.0);
    CHECK(p.at(1) == -2.0);
    CHECK(opt.state().first_moment[0][0] == 0.0);
  }
  SUBCASE("single scalar step matches the hand-evaluated rule") {
    auto p = Tensor::scalar(1.0, true);
    p.mutable_grad()[0] = 0.5;
    Adam opt({p}, {0.1, 0.5, 0.999, 1e-8});
    REQUIRE(opt.step());
    // m = 0.25, v = 0.00025; corrected m = 0.5, v = 0.25.
    CHECK(p.item() == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-15));
    CHECK(opt.state().first_moment[0][0] == doctest::Approx(0.25));
    CHECK(opt.state().second_moment[0][0] == doctest::Approx(0.00025));
  }
  SUBCASE("identical inputs give identical results") {
    std::mt19937_64 rng(9);
    auto a = random_tensor({4, 4}, rng), b = a.clone(true);
    Adam oa({a}, {}), ob({b}, {});
    for (int s = 0; s < 5; ++s) {
      auto ga = a.mutable_grad(), gb = b.mutable_grad();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] = gb[i] = std::sin(double(i + s));
      oa.step();
      ob.step();
    }
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.at(i) == b.at(i));
  }
  SUBCASE("non-finite gradient skips the step and is counted") {
    auto p = Tensor::from({2}, {1, 2}, true);
    p.mutable_grad()[1] = std::numeric_limits<double>::infinity();
    Adam opt({p}, {});
    CHECK_FALSE(opt.step());
    CHECK(opt.state().skipped == 1);
    CHECK(opt.state().step == 0);
    CHECK(p.at(0) == 1.0);
  }
}

TEST_CASE("checkpoint round trip is bit exact") {
  std::mt19937_64 rng(77);
  Checkpoint ck;
  ck.config_hash = 0xDEADBEEFCAFEF00DULL;
  for (int i = 0; i < 6; ++i) {
    std::uniform_int_distribution<std::size_t> ext(1, 5);
    Shape s;
    for (int r = 0, n = 1 + i % 4; r < n; ++r) s.push_back(ext(rng));
    auto t = random_tensor(s, rng, std::pow(10.0, i - 3), false);
    ck.tensors.push_back({"param/" + std::to_string(i), t});
  }
  auto special = Tensor::from({4}, {-0.0, std::numeric_limits<double>::denorm_min(),
                                    std::numeric_limits<double>::max(), std::nan("")});
  ck.tensors.push_back({"special", special});

  std::stringstream ss;
  write_checkpoint(ss, ck);
  const std::string bytes = ss.str();
  CHECK(bytes.substr(0, 4) == "EMVC");
  auto back = read_checkpoint(ss);
  CHECK(back.config_hash == ck.config_hash);
  REQUIRE(back.tensors.size() == ck.tensors.size());
  std::stringstream again;
  write_checkpoint(again, back);
  CHECK(again.str() == bytes);

  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK(code_of([&] { read_checkpoint(truncated); }) == ErrorCode::io);
}

TEST_CASE("conv2d few-output-channel path agrees with the general path") {
  std::mt19937_64 rng(41);
  const auto s5 = spec(3, 5, 3, 5, 1, Padding{1, 2, 2, 1});
  auto s2 = s5;
  s2.out_channels = 2;
  auto x = random_tensor({2, 3, 6, 9}, rng);
  auto w5 = random_tensor(s5.weight_shape(), rng);
  auto b5 = random_tensor({5}, rng);
  std::vector<double> w2v(w5.data().begin(), w5.data().begin() + 2 * 3 * 3 * 5);
  auto w2 = Tensor::from(s2.weight_shape(), w2v, true);
  auto b2 = Tensor::from({2}, {b5.at(0), b5.at(1)}, true);
  auto y5 = conv2d(x, s5, w5, b5);
  auto y2 = conv2d(x, s2, w2, b2);
  const std::size_t plane = y2.dim(2) * y2.dim(3);
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t i = 0; i < 2 * plane; ++i) CHECK(y2.at(b * 2 * plane + i) == doctest::Approx(y5.at(b * 5 * plane + i)).epsilon(1e-12));
  auto probe = random_tensor(y2.shape(), rng, 1.0, false);
  std::vector<double> probe5(y5.size(), 0.0);
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t i = 0; i < 2 * plane; ++i) probe5[b * 5 * plane + i] = probe.at(b * 2 * plane + i);
  backward(sum(mul(conv2d(x, s2, w2, b2), probe)));
  const std::vector<double> gx2(x.grad().begin(), x.grad().end());
  x.zero_grad();
  backward(sum(mul(conv2d(x, s5, w5, b5), Tensor::from(y5.shape(), probe5))));
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(gx2[i] == doctest::Approx(x.grad()[i]).epsilon(1e-12));
  for (std::size_t i = 0; i < w2.size(); ++i) CHECK(w2.grad()[i] == doctest::Approx(w5.grad()[i]).epsilon(1e-12));
  for (std::size_t i = 0; i < 2; ++i) CHECK(b2.grad()[i] == doctest::Approx(b5.grad()[i]).epsilon(1e-12));
}
