// SPDX-License-Identifier: Apache-2.0
#include "emovc/trainer/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "emovc/common/seed.hpp"
#include "emovc/error.hpp"
#include "emovc/ndgrad/ops.hpp"

namespace emovc::trainer {

namespace fs = std::filesystem;
using nd::Tensor;

void TrainingConfig::validate() const {
  auto bad = [](const std::string& m) { fail(ErrorCode::configuration, "training config: " + m); };
  weights.validate();
  if (crop_width == 0 || crop_width % 32 != 0) bad("crop_width must be a positive multiple of 32");
  if (batch_size < 1) bad("batch_size must be at least 1");
  if (!(lr_g > 0 && lr_d > 0)) bad("learning rates must be positive");
  if (!(rho > 0 && rho <= 4)) bad("rho must lie in (0, 4]");
  if (d_updates + c_updates + g_updates == 0) bad("at least one network must be updated");
}

// --- pairing ----------------------------------------------------------------

Matrix crop_columns(const Matrix& m, std::size_t offset, std::size_t width) {
  require(m.cols > 0, "crop_columns: empty utterance");
  Matrix out(m.rows, width);
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < width; ++c) out(r, c) = m(r, (offset + c) % m.cols);
  return out;
}

PairSampler::PairSampler(std::vector<Matrix> pool_a, std::vector<Matrix> pool_b, std::uint64_t seed)
    : pool_a_(std::move(pool_a)), pool_b_(std::move(pool_b)), rng_(seed) {
  if (pool_a_.empty() || pool_b_.empty()) fail(ErrorCode::configuration, "pair sampler: both utterance pools must be non-empty");
  const std::size_t h = pool_a_.front().rows;
  for (const auto* pool : {&pool_a_, &pool_b_})
    for (const auto& m : *pool) require(m.rows == h && m.cols > 0, "pair sampler: utterances must share a height and be non-empty");
}

PairSampler::Draw PairSampler::draw(std::size_t crop_width) {
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); };
  // Utterances shorter than the crop are looped, so any start frame is valid.
  auto offset = [&](const Matrix& m) { return m.cols > crop_width ? pick(m.cols - crop_width + 1) : pick(m.cols); };
  Draw d;
  d.a = pick(pool_a_.size());
  d.b = pick(pool_b_.size());
  d.offset_a = offset(pool_a_[d.a]);
  d.offset_b = offset(pool_b_[d.b]);
  return d;
}

std::pair<Tensor, Tensor> PairSampler::sample(std::size_t crop_width, std::size_t batch, std::vector<Draw>* draws) {
  const std::size_t h = pool_a_.front().rows, item = h * crop_width;
  std::vector<double> a(batch * item), b(batch * item);
  for (std::size_t i = 0; i < batch; ++i) {
    const Draw d = draw(crop_width);
    if (draws) draws->push_back(d);
    const auto ca = crop_columns(pool_a_[d.a], d.offset_a, crop_width);
    const auto cb = crop_columns(pool_b_[d.b], d.offset_b, crop_width);
    std::copy(ca.data.begin(), ca.data.end(), a.begin() + static_cast<std::ptrdiff_t>(i * item));
    std::copy(cb.data.begin(), cb.data.end(), b.begin() + static_cast<std::ptrdiff_t>(i * item));
  }
  return {Tensor::from({batch, 1, h, crop_width}, std::move(a)), Tensor::from({batch, 1, h, crop_width}, std::move(b))};
}

// --- training step ----------------------------------------------------------

namespace {

std::vector<Tensor> join(std::vector<Tensor> a, const std::vector<Tensor>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// Stops gradient accumulation into a parameter set while alive; the networks
// still take part in the graph.
class Freeze {
 public:
  explicit Freeze(std::vector<Tensor> params) : params_(std::move(params)) {
    for (auto& p : params_) p.impl()->requires_grad = false;
  }
  ~Freeze() {
    for (auto& p : params_) p.impl()->requires_grad = true;
  }
  Freeze(const Freeze&) = delete;
  Freeze& operator=(const Freeze&) = delete;

 private:
  std::vector<Tensor> params_;
};

Tensor bce_to(const Tensor& p, double label) { return nd::bce_loss(p, Tensor::full(p.shape(), label)); }

void check_finite(const LossRecord& r, const char* stage) {
  for (double v : {r.adv_ab, r.adv_ba, r.cyc, r.emo})
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "non-finite loss at step " << r.step << " (" << stage << "): adv_ab=" << r.adv_ab << " adv_ba=" << r.adv_ba
         << " cyc=" << r.cyc << " emo=" << r.emo;
      fail(ErrorCode::non_finite, os.str());
    }
}

}  // namespace

Trainer::Trainer(const TrainingConfig& cfg, std::size_t height)
    : cfg_((cfg.validate(), cfg)),
      models_(std::make_shared<model::CycleGanModels>(cfg.rho, height, cfg.crop_width, cfg.seed)),
      opt_g_(join(models_->g_ab.parameter_tensors(), models_->g_ba.parameter_tensors()), {cfg.lr_g}),
      opt_d_(join(models_->d_a.parameter_tensors(), models_->d_b.parameter_tensors()), {cfg.lr_d}),
      opt_c_(models_->classifier.parameter_tensors(), {cfg.lr_d}) {}

LossRecord Trainer::step(const Tensor& a, const Tensor& b) {
  auto& m = *models_;
  const std::size_t h = m.d_a.input_height(), w = cfg_.crop_width;
  for (const Tensor* t : {&a, &b})
    require(t->rank() == 4 && t->dim(1) == 1 && t->dim(2) == h && t->dim(3) == w,
            "train_step: batch must be [B,1," + std::to_string(h) + "," + std::to_string(w) + "], got " +
                nd::shape_str(t->shape()));
  LossRecord rec;
  rec.step = step_ + 1;

  // The generators' first forward pass is built once: the discriminators see
  // detached copies and the generator update below reuses the graph. Neither
  // D nor C updates touch generator weights, so the values are unchanged.
  Tensor s_ab, s_ba;
  {
    std::unique_ptr<nd::NoGradGuard> frozen;
    if (cfg_.g_updates == 0) frozen = std::make_unique<nd::NoGradGuard>();
    s_ab = m.g_ab.forward(a);
    s_ba = m.g_ba.forward(b);
  }
  const Tensor fake_b = s_ab.detach(), fake_a = s_ba.detach();
  for (std::size_t i = 0; i < std::max<std::size_t>(cfg_.d_updates, 1); ++i) {
    std::unique_ptr<nd::NoGradGuard> frozen;
    if (cfg_.d_updates == 0) frozen = std::make_unique<nd::NoGradGuard>();
    const Tensor dbr = m.d_b.forward(b), dbf = m.d_b.forward(fake_b);
    const Tensor dar = m.d_a.forward(a), daf = m.d_a.forward(fake_a);
    const Tensor adv_ab = model::adversarial_loss(dbr, dbf), adv_ba = model::adversarial_loss(dar, daf);
    if (i == 0) {
      rec.adv_ab = adv_ab.item();
      rec.adv_ba = adv_ba.item();
      std::size_t correct = 0, total = 0;
      for (const Tensor* t : {&dbr, &dar})
        for (double p : t->data()) correct += p > 0.5, ++total;
      for (const Tensor* t : {&dbf, &daf})
        for (double p : t->data()) correct += p < 0.5, ++total;
      rec.d_acc = static_cast<double>(correct) / static_cast<double>(total);
      check_finite(rec, "discriminator");
    }
    if (cfg_.d_updates == 0) break;
    opt_d_.zero_grad();
    nd::backward(nd::scale(nd::add(adv_ab, adv_ba), -1.0));
    opt_d_.step();
  }

  // Classifier on genuine features only.
  for (std::size_t i = 0; i < cfg_.c_updates; ++i) {
    const Tensor loss = nd::add(bce_to(m.classifier.forward(a), model::kLabelA), bce_to(m.classifier.forward(b), model::kLabelB));
    if (!std::isfinite(loss.item())) {
      rec.emo = loss.item();
      check_finite(rec, "classifier");
    }
    opt_c_.zero_grad();
    nd::backward(loss);
    opt_c_.step();
  }

  // Generators, with D and C frozen.
  {
    Freeze freeze(join(opt_d_.params(), opt_c_.params()));
    std::unique_ptr<nd::NoGradGuard> frozen;
    if (cfg_.g_updates == 0) frozen = std::make_unique<nd::NoGradGuard>();
    for (std::size_t i = 0; i < std::max<std::size_t>(cfg_.g_updates, 1); ++i) {
      if (i > 0) {
        s_ab = m.g_ab.forward(a);
        s_ba = m.g_ba.forward(b);
      }
      const Tensor s_aba = m.g_ba.forward(s_ab), s_bab = m.g_ab.forward(s_ba);
      // Non-saturating generator objective: ascend log D(fake).
      const Tensor adv_g = nd::scale(nd::add(nd::gan_log(m.d_b.forward(s_ab)), nd::gan_log(m.d_a.forward(s_ba))), -1.0);
      const Tensor cyc = model::cycle_loss(a, s_aba, b, s_bab);
      const auto& c = m.classifier;
      const Tensor emo = model::emotion_loss({c.forward(a), c.forward(s_ab), c.forward(s_aba), c.forward(b),
                                              c.forward(s_ba), c.forward(s_bab)});
      if (i == 0) {
        rec.cyc = cyc.item();
        rec.emo = emo.item();
        check_finite(rec, "generator");
      }
      if (cfg_.g_updates == 0) break;
      const Tensor loss = nd::add(nd::add(adv_g, nd::scale(cyc, cfg_.weights.lambda1)), nd::scale(emo, cfg_.weights.lambda2));
      opt_g_.zero_grad();
      nd::backward(loss);
      opt_g_.step();
    }
  }
  rec.full = rec.adv_ab + rec.adv_ba + cfg_.weights.lambda1 * rec.cyc + cfg_.weights.lambda2 * rec.emo;
  step_ = rec.step;
  return rec;
}

std::vector<nd::NamedTensor> Trainer::optimizer_tensors() const {
  std::vector<nd::NamedTensor> out;
  for (auto&& part : {opt_g_.export_state("opt/g"), opt_d_.export_state("opt/d"), opt_c_.export_state("opt/c")})
    out.insert(out.end(), part.begin(), part.end());
  out.push_back({"train/step", Tensor::from({2}, {static_cast<double>(step_ >> 32), static_cast<double>(step_ & 0xffffffffULL)})});
  return out;
}

void Trainer::restore(const nd::Checkpoint& ckpt) {
  model::assign_parameters(models_->parameters(), ckpt.tensors);
  opt_g_.import_state("opt/g", ckpt.tensors);
  opt_d_.import_state("opt/d", ckpt.tensors);
  opt_c_.import_state("opt/c", ckpt.tensors);
  const Tensor& s = ckpt.get("train/step");
  require(s.size() == 2, "malformed step record in checkpoint");
  step_ = (static_cast<std::uint64_t>(s.at(0)) << 32) | static_cast<std::uint64_t>(s.at(1));
}

LossRecord train_step(Trainer& trainer, const Tensor& batch_a, const Tensor& batch_b) {
  return trainer.step(batch_a, batch_b);
}

// --- loss log ---------------------------------------------------------------

void write_loss_row(std::ostream& os, const LossRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", static_cast<unsigned long long>(r.step),
                r.adv_ab, r.adv_ba, r.cyc, r.emo, r.full, r.d_acc);
  os << buf;
}

std::vector<LossRecord> read_loss_csv(const fs::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::io, "cannot open loss log " + path.string());
  std::vector<LossRecord> out;
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != kLossCsvHeader) fail(ErrorCode::io, "loss log " + path.string() + " has an unexpected header");
      header = true;
      continue;
    }
    LossRecord r;
    unsigned long long step = 0;
    if (std::sscanf(line.c_str(), "%llu,%lf,%lf,%lf,%lf,%lf,%lf", &step, &r.adv_ab, &r.adv_ba, &r.cyc, &r.emo, &r.full,
                    &r.d_acc) != 7)
      fail(ErrorCode::io, "malformed loss log row: " + line);
    r.step = step;
    out.push_back(r);
  }
  return out;
}

// --- full run ---------------------------------------------------------------

namespace {

fs::path checkpoint_path(const fs::path& dir, std::uint64_t step) {
  char name[32];
  std::snprintf(name, sizeof name, "step_%08llu.ckpt", static_cast<unsigned long long>(step));
  return dir / "checkpoints" / name;
}

std::optional<fs::path> latest_checkpoint(const fs::path& dir) {
  const auto sub = dir / "checkpoints";
  if (!fs::is_directory(sub)) return std::nullopt;
  std::optional<fs::path> best;
  for (const auto& e : fs::directory_iterator(sub))
    if (e.path().extension() == ".ckpt" && (!best || e.path().filename() > best->filename())) best = e.path();
  return best;
}

converter::ModelBundle make_bundle(const Trainer& t, const converter::CorpusStats& stats, const TrainRun& run) {
  converter::ModelBundle b;
  b.models = t.shared_models();
  b.stats = stats;
  b.emotion_a = run.emotion_a;
  b.emotion_b = run.emotion_b;
  b.rho = t.config().rho;
  b.crop_width = t.config().crop_width;
  b.seed = t.config().seed;
  b.step = t.steps_done();
  b.config_hash = run.config_hash;
  return b;
}

void save_training_checkpoint(const fs::path& path, const Trainer& t, const converter::CorpusStats& stats,
                              const TrainRun& run) {
  auto ckpt = make_bundle(t, stats, run).to_checkpoint();
  const auto opt = t.optimizer_tensors();
  ckpt.tensors.insert(ckpt.tensors.end(), opt.begin(), opt.end());
  try {
    nd::save_checkpoint(path, ckpt);
  } catch (const Error& e) {
    fail(ErrorCode::io, "checkpoint write failed at step " + std::to_string(t.steps_done()) + " (" + path.string() +
                            "): " + e.what());
  }
}

}  // namespace

converter::ModelBundle train(const corpus::CorpusManifest& corpus, const TrainingConfig& cfg, const TrainRun& run) {
  cfg.validate();
  for (const auto& e : {run.emotion_a, run.emotion_b})
    if (!corpus.has_emotion(e)) fail(ErrorCode::configuration, "corpus has no emotion '" + e + "'");
  if (run.emotion_a == run.emotion_b) fail(ErrorCode::configuration, "source and target emotions must differ");

  const auto utts = corpus::load_utterances(corpus, {run.emotion_a, run.emotion_b}, {"train"}, run.analysis);
  const auto stats = corpus::compute_stats(utts, run.combo, {run.emotion_a, run.emotion_b});
  const std::size_t height = model::FeatureLayout::for_combo(run.combo).height();
  std::vector<Matrix> pool_a, pool_b;
  for (const auto& u : utts) {
    const auto s = converter::assemble(u.features, stats);
    // Keep only the real frames; the width padding is not needed for cropping.
    Matrix m(height, u.features.frames());
    for (std::size_t r = 0; r < height; ++r)
      for (std::size_t t = 0; t < m.cols; ++t) m(r, t) = s.data.at(r * s.width() + t);
    (u.entry.emotion == run.emotion_a ? pool_a : pool_b).push_back(std::move(m));
  }
  PairSampler sampler(std::move(pool_a), std::move(pool_b));
  Trainer trainer(cfg, height);

  fs::create_directories(run.out_dir / "checkpoints");
  const auto log_path = run.out_dir / "losses.csv";
  std::vector<LossRecord> history;
  if (run.resume) {
    if (const auto ckpt = latest_checkpoint(run.out_dir)) {
      trainer.restore(nd::load_checkpoint(*ckpt));
      if (fs::exists(log_path))
        for (const auto& r : read_loss_csv(log_path))
          if (r.step <= trainer.steps_done()) history.push_back(r);
    }
  }
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) fail(ErrorCode::io, "cannot write loss log " + log_path.string());
  log << "# config_hash=" << std::hex << std::setw(16) << std::setfill('0') << run.config_hash << std::dec << '\n'
      << kLossCsvHeader << '\n';
  for (const auto& r : history) write_loss_row(log, r);
  log.flush();

  while (trainer.steps_done() < cfg.steps) {
    // Each step's draws depend only on (seed, step), so a resumed run continues identically.
    sampler.reseed(mix_seed({cfg.seed, trainer.steps_done() + 1, 0x9a17}));
    const auto [a, b] = sampler.sample(cfg.crop_width, cfg.batch_size);
    const auto rec = trainer.step(a, b);
    write_loss_row(log, rec);
    if (run.on_step) run.on_step(rec);
    if (cfg.checkpoint_interval && rec.step % cfg.checkpoint_interval == 0 && rec.step < cfg.steps) {
      log.flush();
      save_training_checkpoint(checkpoint_path(run.out_dir, rec.step), trainer, stats, run);
    }
  }
  log.flush();
  if (!log) fail(ErrorCode::io, "failed writing loss log " + log_path.string());
  save_training_checkpoint(checkpoint_path(run.out_dir, trainer.steps_done()), trainer, stats, run);
  auto bundle = make_bundle(trainer, stats, run);
  try {
    converter::save_bundle(run.out_dir / "model.ckpt", bundle);
  } catch (const Error& e) {
    fail(ErrorCode::io, "final model write failed (" + (run.out_dir / "model.ckpt").string() + "): " + e.what());
  }
  return bundle;
}

}  // namespace emovc::trainer
