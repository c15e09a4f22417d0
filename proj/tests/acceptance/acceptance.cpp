// SPDX-License-Identifier: Apache-2.0
//
// Acceptance run: executes the nine criteria and prints one PASS/FAIL line
// for each. Exit status is 0 when every criterion outside --expect-fail
// passed, 1 otherwise.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <random>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "emovc/converter/converter.hpp"
#include "emovc/corpus/corpus.hpp"
#include "emovc/dsp/features.hpp"
#include "emovc/error.hpp"
#include "emovc/evalkit/evaluate.hpp"
#include "emovc/evalkit/metrics.hpp"
#include "emovc/evalkit/probe.hpp"
#include "emovc/model/cyclegan.hpp"
#include "emovc/model/losses.hpp"
#include "emovc/ndgrad/ops.hpp"
#include "emovc/prosody/cwt.hpp"
#include "emovc/trainer/trainer.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

using namespace emovc;
namespace fs = std::filesystem;
using emovc::testing::grad_check_normwise;
using emovc::testing::random_tensor;
using nd::Tensor;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Upper tail of the chi-square distribution via the regularised lower gamma series.
double chi2_upper(double x, double dof) {
  const double a = dof / 2, z = x / 2;
  double term = 1.0 / a, sum = term;
  for (int n = 1; n < 500; ++n) {
    term *= z / (a + n);
    sum += term;
  }
  return 1.0 - std::exp(-z + a * std::log(z) - std::lgamma(a)) * sum;
}

double chi2_p(const std::vector<double>& counts) {
  double n = 0;
  for (double c : counts) n += c;
  const double e = n / static_cast<double>(counts.size());
  double x2 = 0;
  for (double c : counts) x2 += (c - e) * (c - e) / e;
  return chi2_upper(x2, static_cast<double>(counts.size() - 1));
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

// --- 1. gradient suite ------------------------------------------------------

constexpr int kGradConfigs = 20;
constexpr double kGradTol = 1e-4;

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240);
  std::uniform_int_distribution<std::size_t> small(1, 3), extent(4, 7), batch(1, 2), coin(0, 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::pair<std::string, double>> worst;  // per op, max rel error over all configs
  // Each tensor is its own group; every coordinate is probed.
  auto check = [](const std::function<Tensor()>& f, const std::vector<Tensor>& wrt) {
    std::vector<std::vector<Tensor>> groups;
    for (const auto& t : wrt) groups.push_back({t});
    return grad_check_normwise(f, groups).max_rel_error;
  };
  auto record = [&](const std::string& op, double err) {
    for (auto& [name, e] : worst)
      if (name == op) {
        e = std::max(e, err);
        return;
      }
    worst.emplace_back(op, err);
  };

  for (int k = 0; k < kGradConfigs; ++k) {
    // Convolutions with random geometry.
    for (bool transposed : {false, true}) {
      nd::ConvSpec s;
      s.kernel_h = small(rng);
      s.kernel_w = small(rng);
      s.in_channels = small(rng);
      s.out_channels = small(rng);
      s.stride = 1 + coin(rng);
      s.padding = {std::min(coin(rng), s.kernel_h - 1), std::min(coin(rng), s.kernel_h - 1),
                   std::min(coin(rng), s.kernel_w - 1), std::min(coin(rng), s.kernel_w - 1)};
      auto x = random_tensor({batch(rng), s.in_channels, extent(rng), extent(rng)}, rng);
      auto w = random_tensor(s.weight_shape(transposed), rng);
      auto b = random_tensor({s.out_channels}, rng);
      const auto oh = transposed ? s.transpose_out_h(x.dim(2)) : s.conv_out_h(x.dim(2));
      const auto ow = transposed ? s.transpose_out_w(x.dim(3)) : s.conv_out_w(x.dim(3));
      auto probe = random_tensor({x.dim(0), s.out_channels, oh, ow}, rng, 1.0, false);
      auto f = [&] {
        return nd::sum(nd::mul(transposed ? nd::conv_transpose2d(x, s, w, b) : nd::conv2d(x, s, w, b), probe));
      };
      record(transposed ? "conv_transpose2d" : "conv2d", check(f, {x, w, b}));
    }

    const nd::Shape shape{batch(rng), small(rng), extent(rng), extent(rng)};
    auto x = random_tensor(shape, rng);
    auto y = random_tensor(shape, rng);
    auto probe = random_tensor(shape, rng, 1.0, false);
    auto g = random_tensor({shape[1]}, rng), b = random_tensor({shape[1]}, rng);
    auto weighted = [&](const Tensor& t) { return nd::sum(nd::mul(t, probe)); };
    const double alpha = 0.5 * unit(rng), c = 4.0 * unit(rng) - 2.0;
    record("instance_norm", check([&] { return weighted(nd::instance_norm(x, g, b)); }, {x, g, b}));
    record("relu", check([&] { return weighted(nd::relu(x)); }, {x}));
    record("leaky_relu", check([&] { return weighted(nd::leaky_relu(x, alpha)); }, {x}));
    record("sigmoid", check([&] { return weighted(nd::sigmoid(x)); }, {x}));
    record("add", check([&] { return weighted(nd::add(x, y)); }, {x, y}));
    record("sub", check([&] { return weighted(nd::sub(x, y)); }, {x, y}));
    record("mul", check([&] { return weighted(nd::mul(x, y)); }, {x, y}));
    record("scale", check([&] { return weighted(nd::scale(x, c)); }, {x}));
    record("add_scalar", check([&] { return weighted(nd::square(nd::add_scalar(x, c))); }, {x}));
    record("square", check([&] { return weighted(nd::square(x)); }, {x}));
    record("sum", check([&] { return nd::square(nd::sum(x)); }, {x}));
    record("mean", check([&] { return nd::square(nd::mean(x)); }, {x}));
    const std::size_t n = nd::numel(shape);
    auto flat = random_tensor({n}, rng, 1.0, false);
    record("reshape", check([&] { return nd::sum(nd::mul(nd::reshape(nd::square(x), {n}), flat)); }, {x}));
    if (shape[0] == 2)
      record("slice_batch", check([&] { return weighted(nd::concat_batch({nd::slice_batch(x, 1, 2),
                                                                                nd::slice_batch(y, 0, 1)})); },
                                       {x, y}));
    else
      record("slice_batch", check([&] { return nd::sum(nd::square(nd::slice_batch(x, 0, 1))); }, {x}));
    record("concat_batch", check([&] { return nd::sum(nd::square(nd::concat_batch({x, y}))); }, {x, y}));
    record("l1_loss", check([&] { return nd::l1_loss(x, y); }, {x, y}));

    std::vector<double> pv(n), tv(n);
    for (std::size_t i = 0; i < n; ++i) pv[i] = 0.05 + 0.9 * unit(rng), tv[i] = unit(rng);
    auto p = Tensor::from(shape, pv, true);
    auto t = Tensor::from(shape, tv);
    record("bce_loss", check([&] { return nd::bce_loss(p, t); }, {p}));
    record("gan_log", check([&] { return nd::gan_log(p); }, {p}));
    record("gan_log_complement", check([&] { return nd::gan_log_complement(p); }, {p}));
  }

  // Full objective: both generators, both discriminators and the classifier in one graph.
  double full_err = 0.0;
  std::size_t full_checked = 0, full_skipped = 0;
  for (int k = 0; k < kGradConfigs; ++k) {
    model::CycleGanModels m(0.0625, 8, 32, 100 + static_cast<std::uint64_t>(k));
    auto a = random_tensor({1, 1, 8, 32}, rng);
    auto b = random_tensor({1, 1, 8, 32}, rng);
    const model::LossWeights w{20.0 * unit(rng), 2.0 * unit(rng)};
    auto f = [&] {
      auto ab = m.g_ab.forward(a), ba = m.g_ba.forward(b);
      auto aba = m.g_ba.forward(ab), bab = m.g_ab.forward(ba);
      auto adv_ab = model::adversarial_loss(m.d_b.forward(b), m.d_b.forward(ab));
      auto adv_ba = model::adversarial_loss(m.d_a.forward(a), m.d_a.forward(ba));
      model::EmotionOutputs c{m.classifier.forward(a), m.classifier.forward(ab), m.classifier.forward(aba),
                              m.classifier.forward(b), m.classifier.forward(ba), m.classifier.forward(bab)};
      return model::full_objective(adv_ab, adv_ba, model::cycle_loss(a, aba, b, bab), model::emotion_loss(c), w);
    };
    // One group per network plus one for the inputs; one coordinate per tensor.
    std::vector<std::vector<Tensor>> groups{{a, b}};
    std::string prev;
    for (const auto& p : m.parameters()) {
      const auto net = p.name.substr(0, p.name.find('/'));
      if (net != prev) groups.emplace_back(), prev = net;
      groups.back().push_back(p.tensor);
    }
    const auto r = grad_check_normwise(f, groups, 1, 1e-7, static_cast<unsigned>(k));
    full_err = std::max(full_err, r.max_rel_error);
    full_checked += r.checked;
    full_skipped += r.skipped;
  }
  record("full objective", full_err);

  const double elapsed = seconds_since(t0);
  std::string bad;
  double max_err = 0;
  for (const auto& [name, e] : worst) {
    max_err = std::max(max_err, e);
    if (!(e < kGradTol)) bad += " " + name;
  }
  Outcome o;
  o.pass = bad.empty() && elapsed < 60.0 && full_skipped * 20 < full_checked;
  o.detail = fmt("%zu checks x %d configs, max rel err %.2e, full graph %.2e over %zu coords (%zu on kinks), %.1f s",
                 worst.size(), kGradConfigs, max_err, full_err, full_checked, full_skipped, elapsed);
  if (!bad.empty()) o.detail += "; over tolerance:" + bad;
  return o;
}

// --- 2. loss oracles --------------------------------------------------------

Outcome loss_oracles() {
  std::mt19937_64 rng(2);
  // Zero-weight networks answer exactly one half.
  model::CycleGanModels m(0.25, 40, 64, 3);
  for (auto* net : {&m.d_a, &m.d_b, &m.classifier})
    for (const auto& p : net->parameters("x")) {
      Tensor t = p.tensor;
      for (auto& v : t.mutable_data()) v = 0.0;
    }
  auto a = random_tensor({2, 1, 40, 64}, rng, 1.0, false);
  auto b = random_tensor({2, 1, 40, 64}, rng, 1.0, false);
  const double adv = model::adversarial_loss(m.d_b.forward(b), m.d_b.forward(a)).item();
  const double adv_err = std::abs(adv - 2.0 * std::log(0.5));

  // Identity generators: every converted and cycled item is its input.
  model::EmotionOutputs c{m.classifier.forward(a), m.classifier.forward(a), m.classifier.forward(a),
                          m.classifier.forward(b), m.classifier.forward(b), m.classifier.forward(b)};
  const double emo = model::emotion_loss(c).item();
  const double emo_err = std::abs(emo - 6.0 * std::log(2.0));
  const double cyc = model::cycle_loss(a, a, b, b).item();

  Outcome o;
  o.pass = adv_err <= 1e-12 && emo_err <= 1e-12 && cyc == 0.0;
  o.detail = fmt("adv %.15f (err %.1e), emo %.15f (err %.1e), cycle %.1e", adv, adv_err, emo, emo_err, cyc);
  return o;
}

// --- 3. metric oracles ------------------------------------------------------

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix m(rows, cols);
  for (auto& v : m.data) v = g(rng);
  return m;
}

Outcome metric_oracles() {
  std::mt19937_64 rng(3);
  const double unit = 10.0 / std::numbers::ln10 * std::numbers::sqrt2;
  double mcd_err = 0;
  for (int trial = 0; trial < 20; ++trial) {
    auto t = random_matrix(1, 36, rng), dir = random_matrix(1, 36, rng);
    double norm = 0;
    for (double v : dir.data) norm += v * v;
    norm = std::sqrt(norm);
    Matrix c = t;
    for (std::size_t d = 0; d < 36; ++d) c(0, d) += dir(0, d) / norm;
    mcd_err = std::max(mcd_err, std::abs(evalkit::mcd(t, c, {{{0, 0}}, 0}) - unit));
  }

  double lf0_err = 0;
  std::uniform_real_distribution<double> f0(60.0, 400.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 5 + static_cast<std::size_t>(trial);
    std::vector<double> ft(n), fc(n);
    std::vector<std::uint8_t> v(n, 1);
    for (std::size_t i = 0; i < n; ++i) ft[i] = f0(rng), fc[i] = std::numbers::e * ft[i];
    v[n / 2] = 0;
    evalkit::DtwPath diag;
    for (std::size_t i = 0; i < n; ++i) diag.pairs.emplace_back(i, i);
    lf0_err = std::max(lf0_err, std::abs(evalkit::logf0_mse(ft, fc, v, v, diag).value - 1.0));
  }

  std::size_t cases = 0, dtw_bad = 0;
  double dtw_err = 0;
  for (std::size_t t1 = 1; t1 <= 64; ++t1)
    for (std::size_t t2 = 1; t1 * t2 <= 64; ++t2)
      for (int rep = 0; rep < 3; ++rep) {
        const auto x = random_matrix(t1, 3, rng), y = random_matrix(t2, 3, rng);
        const auto p = evalkit::dtw_align(x, y);
        const double oracle = emovc::testing::dtw_exhaustive(x, y);
        const double err = std::abs(p.cost - oracle) / std::max(1.0, oracle);
        dtw_err = std::max(dtw_err, err);
        dtw_bad += err > 1e-12;
        ++cases;
      }

  Outcome o;
  o.pass = mcd_err <= 1e-9 && lf0_err <= 1e-12 && dtw_bad == 0;
  o.detail = fmt("MCD err %.1e (target %.4f dB), LogF0-MSE err %.1e, DTW %zu/%zu exact (max rel err %.1e)", mcd_err,
                 unit, lf0_err, cases - dtw_bad, cases, dtw_err);
  return o;
}

// --- 4. shapes --------------------------------------------------------------

Outcome shape_suite() {
  std::mt19937_64 rng(4);
  model::GeneratorNet g(0.25, 1);
  std::size_t ok = 0, total = 0;
  std::string heights;
  for (auto combo : model::all_combos()) {
    const auto layout = model::FeatureLayout::for_combo(combo);
    heights += (heights.empty() ? "" : "/") + std::to_string(layout.height());
    for (std::size_t w : {32u, 64u, 128u}) {
      ++total;
      model::FeatureTensor s;
      s.layout = layout;
      s.data = random_tensor({2, 1, layout.height(), w}, rng, 1.0, false);
      nd::NoGradGuard guard;
      const auto out = model::generator_forward(g, s);
      model::DiscriminatorNet d(0.25, layout.height(), w, 2);
      model::ClassifierNet c(0.25, layout.height(), w, 3);
      const auto pd = model::discriminate(d, s), pc = model::discriminate(c, s);
      bool good = out.data.shape() == s.data.shape() && pd.shape() == nd::Shape{2} && pc.shape() == nd::Shape{2};
      for (const auto* p : {&pd, &pc})
        for (double v : p->data()) good = good && v > 0.0 && v < 1.0;
      ok += good;
    }
  }
  return {ok == total, fmt("%zu/%zu combo x width cases, heights %s", ok, total, heights.c_str())};
}

// --- 5. CWT round trip ------------------------------------------------------

Outcome cwt_round_trip() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 1.0, sum = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t frames = 150 + 5 * static_cast<std::size_t>(trial);
    prosody::ProsodyTrack t;
    t.values.assign(frames, 5.0);
    t.mask.assign(frames, 1);
    for (int j = 0; j < 4; ++j) {
      const double period = std::exp(std::log(8.0) + u(rng) * (std::log(300.0) - std::log(8.0)));
      const double amp = g(rng), phase = 2 * std::numbers::pi * u(rng);
      for (std::size_t i = 0; i < frames; ++i)
        t.values[i] += amp * std::sin(2 * std::numbers::pi * static_cast<double>(i) / period + phase);
    }
    const double r = pearson(prosody::cwt_reconstruct(prosody::cwt_decompose(t)).values, t.values);
    worst = std::min(worst, r);
    sum += r;
  }
  return {worst >= 0.95, fmt("100 contours, min Pearson %.4f, mean %.4f", worst, sum / 100)};
}

// --- 6. energy rescaling ----------------------------------------------------

Outcome energy_rescaling() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> dim(1, 60);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Matrix env(dim(rng), dim(rng) + 1);
    for (double& v : env.data) v = std::exp(8.0 * u(rng) - 6.0);
    std::vector<double> target(env.rows);
    for (double& e : target) e = std::exp(10.0 * u(rng) - 5.0);
    const auto got = dsp::energy_contour(converter::energy_rescale(env, target));
    for (std::size_t t = 0; t < env.rows; ++t) worst = std::max(worst, std::abs(got[t] - target[t]) / target[t]);
  }
  return {worst <= 1e-9, fmt("100 cases, max relative error %.1e", worst)};
}

// --- 7. non-parallel contract -----------------------------------------------

Outcome non_parallel(const fs::path& source_dir) {
  std::vector<Matrix> pa, pb;
  for (std::size_t i = 0; i < 10; ++i) pa.emplace_back(4, 60 + 3 * i), pb.emplace_back(4, 50 + 5 * i);
  trainer::PairSampler s(pa, pb, 1234);
  const std::size_t n = 10000;
  std::vector<double> ca(10, 0), cb(10, 0), ia, ib;
  for (std::size_t i = 0; i < n; ++i) {
    const auto d = s.draw(32);
    ++ca[d.a];
    ++cb[d.b];
    ia.push_back(static_cast<double>(d.a));
    ib.push_back(static_cast<double>(d.b));
  }
  const double p_a = chi2_p(ca), p_b = chi2_p(cb), r = pearson(ia, ib);

  // Offsets within one utterance are uniform over the valid start frames.
  trainer::PairSampler one({Matrix(2, 50)}, {Matrix(2, 50)}, 99);
  std::vector<double> offsets(19, 0);
  for (std::size_t i = 0; i < 19000; ++i) ++offsets[one.draw(32).offset_a];
  const double p_off = chi2_p(offsets);

  // Follow project includes from the trainer sources; none may reach evalkit or mention DTW.
  std::vector<fs::path> todo{source_dir / "src/trainer/trainer.cpp", source_dir / "include/emovc/trainer/trainer.hpp"};
  std::set<fs::path> seen;
  std::vector<std::string> offenders;
  const std::regex inc(R"re(#include "(emovc/[^"]+)")re");
  bool readable = true;
  while (!todo.empty()) {
    const fs::path p = todo.back();
    todo.pop_back();
    if (!seen.insert(p).second) continue;
    if (!fs::exists(p)) {
      readable = false;
      continue;
    }
    std::string text = slurp(p), lower = text;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (p.string().find("evalkit") != std::string::npos || lower.find("dtw") != std::string::npos)
      offenders.push_back(p.filename().string());
    for (std::sregex_iterator it(text.begin(), text.end(), inc), end; it != end; ++it)
      todo.push_back(source_dir / "include" / (*it)[1].str());
  }

  Outcome o;
  o.pass = p_a > 0.01 && p_b > 0.01 && p_off > 0.01 && std::abs(r) < 0.05 && offenders.empty() && readable &&
           seen.size() > 5;
  o.detail = fmt("chi2 p %.3f / %.3f, offsets p %.3f, r %+.4f, %zu trainer sources free of DTW", p_a, p_b, p_off, r,
                 seen.size());
  for (const auto& f : offenders) o.detail += "; reaches " + f;
  if (!readable) o.detail += "; source tree incomplete";
  return o;
}

// --- 8. end-to-end learning signal ------------------------------------------

struct EndToEnd {
  std::size_t steps = 2000;
  std::size_t seeds = 3;
  std::size_t crop = 64;
  std::size_t batch = 1;
};

// Mean cycle loss over the steps within `half` of `step`.
double cycle_around(const std::vector<trainer::LossRecord>& log, std::uint64_t step, std::uint64_t half) {
  double s = 0;
  std::size_t n = 0;
  for (const auto& r : log)
    if (r.step + half >= step && r.step <= step + half) s += r.cyc, ++n;
  return n ? s / static_cast<double>(n) : std::nan("");
}

corpus::CorpusManifest fresh_corpus(const fs::path& dir, const corpus::SynthSpec& spec) {
  fs::remove_all(dir);
  auto m = corpus::generate_synthetic_corpus(spec, dir);
  corpus::extract_features(m);
  return corpus::open_corpus(dir);
}

Outcome end_to_end(const fs::path& work, const EndToEnd& e) {
  const auto t0 = Clock::now();
  const auto m = fresh_corpus(work / "corpus", corpus::SynthSpec{});
  const auto probe = evalkit::train_probe(m, "neutral", "angry");

  std::vector<double> frac, rate, ratio;
  std::string per_seed;
  for (std::size_t k = 0; k < e.seeds; ++k) {
    trainer::TrainingConfig cfg;
    cfg.crop_width = e.crop;
    cfg.batch_size = e.batch;
    cfg.steps = e.steps;
    cfg.rho = 0.25;
    cfg.seed = 7 + k;
    cfg.checkpoint_interval = 0;
    trainer::TrainRun run;
    run.out_dir = work / ("seed" + std::to_string(cfg.seed));
    run.combo = model::FeatureCombo::mcc_lf0cwt_lecwt;
    fs::remove_all(run.out_dir);
    std::vector<trainer::LossRecord> log;
    run.on_step = [&](const trainer::LossRecord& r) {
      log.push_back(r);
      if (r.step % 250 == 0)
        std::fprintf(stderr, "  seed %llu step %llu cyc %.4f (%.0f s)\n", static_cast<unsigned long long>(cfg.seed),
                     static_cast<unsigned long long>(r.step), r.cyc, seconds_since(t0));
    };
    const auto bundle = trainer::train(m, cfg, run);

    evalkit::EvalOptions opt;
    opt.probe = &probe;
    const auto rep = evalkit::evaluate(bundle, m, opt);
    const double early = cycle_around(log, 100, 10), late = cycle_around(log, e.steps - 10, 10);
    const double raw_early = cycle_around(log, 100, 0), raw_late = cycle_around(log, e.steps, 0);
    frac.push_back(rep.f0_shift_fraction());
    rate.push_back(rep.probe_rate);
    ratio.push_back(late / early);
    per_seed += fmt(" [seed %llu: F0 %.2f, probe %.2f, cyc %.3f->%.3f, single steps %.3f->%.3f]",
                    static_cast<unsigned long long>(cfg.seed), frac.back(), rate.back(), early, late, raw_early,
                    raw_late);
  }
  const double elapsed = seconds_since(t0);
  const double a = median(frac), b = median(rate), c = median(ratio);
  Outcome o;
  o.pass = a >= 0.5 && b >= 0.8 && c < 0.25 && elapsed <= 1800.0;
  o.detail = fmt("median F0 shift %.2f (need >= 0.50) %s, probe %.2f (>= 0.80) %s, cycle end/step-100 %.3f (< 0.25) %s, "
                 "%.0f s (<= 1800) %s",
                 a, a >= 0.5 ? "ok" : "MISS", b, b >= 0.8 ? "ok" : "MISS", c, c < 0.25 ? "ok" : "MISS", elapsed,
                 elapsed <= 1800.0 ? "ok" : "MISS") +
             per_seed;
  return o;
}

// --- 9. determinism ---------------------------------------------------------

Outcome determinism(const fs::path& work) {
  corpus::SynthSpec spec;
  spec.train = 4;
  spec.val = 1;
  spec.eval = 2;
  spec.emotions.resize(3);
  const auto m = fresh_corpus(work / "det_corpus", spec);
  evalkit::ProbeConfig pc;
  pc.steps = 20;

  std::vector<std::vector<std::string>> artifacts;
  for (int run_index = 0; run_index < 2; ++run_index) {
    trainer::TrainingConfig cfg;
    cfg.crop_width = 32;
    cfg.batch_size = 2;
    cfg.steps = 30;
    cfg.seed = 21;
    cfg.checkpoint_interval = 10;
    trainer::TrainRun run;
    run.out_dir = work / ("det" + std::to_string(run_index));
    fs::remove_all(run.out_dir);
    const auto bundle = trainer::train(m, cfg, run);
    const auto probe = evalkit::train_probe(m, "neutral", "angry", pc);
    evalkit::EvalOptions opt;
    opt.probe = &probe;
    std::vector<evalkit::EvalReport> reports{evalkit::evaluate(bundle, m, opt)};
    opt.direction = converter::Direction::b_to_a;
    reports.push_back(evalkit::evaluate(bundle, m, opt));
    evalkit::save_report_csv(run.out_dir / "report.csv", reports);

    std::vector<std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(run.out_dir))
      if (entry.is_regular_file()) files.push_back(fs::relative(entry.path(), run.out_dir).string());
    std::sort(files.begin(), files.end());
    std::vector<std::string> contents;
    for (const auto& f : files) contents.push_back(f + "\n" + slurp(run.out_dir / f));
    artifacts.push_back(std::move(contents));
  }
  std::size_t same = 0;
  for (std::size_t i = 0; i < std::min(artifacts[0].size(), artifacts[1].size()); ++i)
    same += artifacts[0][i] == artifacts[1][i];
  const bool pass = artifacts[0].size() == artifacts[1].size() && same == artifacts[0].size() && same >= 5;
  return {pass, fmt("%zu/%zu artifacts bit-identical (checkpoints, loss log, report)", same, artifacts[0].size())};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"emovc acceptance criteria"};
  std::vector<int> only, expect_fail;
  fs::path work = fs::temp_directory_path() / "emovc_acceptance";
  fs::path source_dir = EMOVC_SOURCE_DIR;
  EndToEnd e2e;
  app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',')->check(CLI::Range(1, 9));
  app.add_option("--expect-fail", expect_fail, "criteria whose failure does not affect the exit status")
      ->delimiter(',')
      ->check(CLI::Range(1, 9));
  app.add_option("--work", work, "scratch directory for corpora and runs");
  app.add_option("--source-dir", source_dir, "project source tree (for the dependency check)");
  app.add_option("--steps", e2e.steps, "training steps for the end-to-end criterion");
  app.add_option("--seeds", e2e.seeds, "seeds for the end-to-end criterion");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient suite", gradient_suite},
      {"loss oracles", loss_oracles},
      {"metric oracles", metric_oracles},
      {"shape suite", shape_suite},
      {"CWT round trip", cwt_round_trip},
      {"energy rescaling", energy_rescaling},
      {"non-parallel contract", [&] { return non_parallel(source_dir); }},
      {"end-to-end learning signal", [&] { return end_to_end(work, e2e); }},
      {"determinism", [&] { return determinism(work); }},
  };
  fs::create_directories(work);

  int unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& ex) {
      o = {false, std::string("error: ") + ex.what()};
    }
    const bool tolerated = std::find(expect_fail.begin(), expect_fail.end(), id) != expect_fail.end();
    if (!o.pass && !tolerated) ++unexpected;
    std::printf("criterion %d %s: %s (%s)%s\n", id, criteria[i].first, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                !o.pass && tolerated ? " [expected]" : "");
    std::fflush(stdout);
  }
  return unexpected ? 1 : 0;
}
