// SPDX-License-Identifier: Apache-2.0
#include "emovc/harness/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <json.hpp>

#include "emovc/error.hpp"
#include "emovc/evalkit/probe.hpp"
#include "emovc/harness/plots.hpp"

namespace emovc::harness {

namespace fs = std::filesystem;

void log(const std::string& stage, const std::string& message) { std::cerr << "emovc " << stage << ": " << message << '\n'; }

std::string combo_slug(model::FeatureCombo combo) {
  auto s = model::combo_name(combo);
  std::replace(s.begin(), s.end(), '+', '_');
  return s;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  os << text;
  if (!os) fail(ErrorCode::io, "cannot write " + path.string());
}

void write_config(const fs::path& dir, const RunConfig& cfg) {
  write_text(dir / "config.txt", "# config_hash=" + hash_hex(cfg.hash()) + "\n" + cfg.dump());
}

const char* direction_name(converter::Direction d) { return d == converter::Direction::a_to_b ? "a2b" : "b2a"; }

std::optional<evalkit::Probe> make_probe(const RunConfig& cfg, const corpus::CorpusManifest& m, const std::string& a,
                                         const std::string& b) {
  if (!cfg.flag("probe")) return std::nullopt;
  log("probe", "training " + a + " vs " + b + " probe for " + cfg.get("probe_steps") + " steps");
  return evalkit::train_probe(m, a, b, probe_config(cfg));
}

std::vector<evalkit::EvalReport> evaluate_bundle(const converter::ModelBundle& bundle, const corpus::CorpusManifest& m,
                                                 const RunConfig& cfg, const evalkit::Probe* probe) {
  std::vector<evalkit::EvalReport> out;
  for (auto dir : {converter::Direction::a_to_b, converter::Direction::b_to_a}) {
    evalkit::EvalOptions opt;
    opt.split = cfg.get("split");
    opt.direction = dir;
    opt.exclude_c0 = cfg.flag("exclude_c0");
    opt.dtw_band = cfg.count("dtw_band");
    opt.probe = probe;
    if (!cfg.get("wav_dir").empty())
      opt.wav_dir = cfg.path("wav_dir") / combo_slug(bundle.combo()) / direction_name(dir);
    auto r = evalkit::evaluate(bundle, m, opt);
    r.config_hash = cfg.hash();
    log("evaluate", model::combo_name(bundle.combo()) + " " + r.source + "->" + r.target + ": MCD " +
                        std::to_string(r.mean_mcd) + " dB, " + std::to_string(r.utterances.size()) + " utterances");
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

corpus::CorpusManifest synth_corpus(const RunConfig& cfg) {
  const auto spec = synth_spec(cfg);
  const auto root = cfg.path("corpus");
  log("synth-corpus", "rendering " + std::to_string(spec.emotions.size()) + " emotions into " + root.string());
  auto m = corpus::generate_synthetic_corpus(spec, root);
  write_config(root, cfg);
  log("synth-corpus", std::to_string(m.entries.size()) + " utterances written");
  return m;
}

std::size_t extract(const RunConfig& cfg) {
  const auto m = corpus::open_corpus(cfg.path("corpus"));
  for (const auto& u : m.unreadable) log("extract", "skipping unreadable " + u);
  const auto utts = corpus::extract_features(m);
  log("extract", std::to_string(utts.size()) + " feature files under " + (m.root / "features").string());
  return utts.size();
}

converter::ModelBundle train(const RunConfig& cfg) {
  const auto tcfg = training_config(cfg);
  const auto m = corpus::open_corpus(cfg.path("corpus"));
  trainer::TrainRun run;
  run.out_dir = cfg.path("out");
  run.emotion_a = cfg.get("source");
  run.emotion_b = cfg.get("target");
  run.combo = combo(cfg);
  run.config_hash = cfg.hash();
  run.resume = cfg.flag("resume");
  run.on_step = [&](const trainer::LossRecord& r) {
    if (r.step % 50 == 0 || r.step == tcfg.steps) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "step %llu/%zu cyc=%.4f emo=%.4f adv=%.4f,%.4f d_acc=%.2f",
                    static_cast<unsigned long long>(r.step), tcfg.steps, r.cyc, r.emo, r.adv_ab, r.adv_ba, r.d_acc);
      log("train", buf);
    }
  };
  fs::create_directories(run.out_dir);
  write_config(run.out_dir, cfg);
  log("train", model::combo_name(run.combo) + " " + run.emotion_a + "<->" + run.emotion_b + " config " +
                   hash_hex(run.config_hash));
  auto bundle = trainer::train(m, tcfg, run);
  write_svg(run.out_dir / "losses.svg", loss_chart(trainer::read_loss_csv(run.out_dir / "losses.csv"), run.config_hash));
  log("train", "model written to " + (run.out_dir / "model.ckpt").string());
  return bundle;
}

converter::ConversionResult convert(const RunConfig& cfg) {
  const auto in = cfg.path("input"), out = cfg.path("output");
  if (in.empty() || out.empty()) fail(ErrorCode::configuration, "convert needs both input and output");
  if (cfg.get("model").empty()) fail(ErrorCode::configuration, "convert needs a model");
  const auto bundle = converter::load_bundle(cfg.path("model"));
  const auto dir = direction(cfg);
  const auto source = dsp::analyze(dsp::read_wav(in));
  auto r = converter::convert_utterance(bundle, source, dir);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  dsp::write_wav(out, r.waveform);

  const bool forward = dir == converter::Direction::a_to_b;
  nlohmann::json meta = {{"config_hash", hash_hex(cfg.hash())},
                         {"model_hash", hash_hex(r.model_hash)},
                         {"combo", model::combo_name(r.combo)},
                         {"from", forward ? bundle.emotion_a : bundle.emotion_b},
                         {"to", forward ? bundle.emotion_b : bundle.emotion_a},
                         {"frames", r.features.frames()},
                         {"rescale_skipped", r.rescale_skipped}};
  write_text(out.string() + ".json", meta.dump(2) + "\n");
  write_svg(out.string() + ".f0.svg", f0_chart(source, r.features, cfg.hash()));
  const std::pair<const char*, const dsp::FeatureSet*> dumps[] = {{".source.csv", &source}, {".converted.csv", &r.features}};
  for (const auto& [suffix, fset] : dumps) {
    std::ofstream os(out.string() + suffix);
    os << "# config_hash=" << hash_hex(cfg.hash()) << '\n';
    dsp::write_features_csv(os, *fset);
    if (!os) fail(ErrorCode::io, "cannot write " + out.string() + suffix);
  }
  log("convert", in.string() + " -> " + out.string() + " (" + meta["from"].get<std::string>() + "->" +
                     meta["to"].get<std::string>() + ", " + std::to_string(r.features.frames()) + " frames)");
  return r;
}

std::vector<evalkit::EvalReport> evaluate(const RunConfig& cfg) {
  if (cfg.get("model").empty()) fail(ErrorCode::configuration, "evaluate needs a model");
  const auto bundle = converter::load_bundle(cfg.path("model"));
  const auto m = corpus::open_corpus(cfg.path("corpus"));
  const auto probe = make_probe(cfg, m, bundle.emotion_a, bundle.emotion_b);
  auto reports = evaluate_bundle(bundle, m, cfg, probe ? &*probe : nullptr);
  const auto dir = cfg.path("out");
  fs::create_directories(dir);
  evalkit::save_report_csv(dir / "report.csv", reports);
  write_text(dir / "report.txt", evalkit::render_table(reports));
  return reports;
}

std::string report(const RunConfig& cfg) {
  const auto dir = cfg.path("out");
  const fs::path path = cfg.get("report").empty() ? dir / "report.csv" : cfg.path("report");
  const auto table = evalkit::render_table(evalkit::load_report_csv(path));
  if (const auto losses = dir / "losses.csv"; fs::exists(losses)) {
    std::uint64_t hash = 0;
    std::ifstream is(losses);
    std::string first;
    std::getline(is, first);
    if (first.rfind("# config_hash=", 0) == 0) hash = std::stoull(first.substr(14), nullptr, 16);
    write_svg(dir / "losses.svg", loss_chart(trainer::read_loss_csv(losses), hash));
  }
  return table;
}

ExperimentResult experiment(const RunConfig& cfg) {
  const auto m = corpus::open_corpus(cfg.path("corpus"));
  const auto probe = make_probe(cfg, m, cfg.get("source"), cfg.get("target"));
  const auto root = cfg.path("out");
  fs::create_directories(root);
  ExperimentResult result;
  for (const auto& name : cfg.list("combos")) {
    try {
      RunConfig sub = cfg;
      sub.set("combo", name);
      sub.set("out", (root / combo_slug(model::parse_combo(name))).string());
      const auto bundle = train(sub);
      for (auto& r : evaluate_bundle(bundle, m, sub, probe ? &*probe : nullptr)) result.reports.push_back(std::move(r));
    } catch (const std::exception& e) {
      log("experiment", name + " failed: " + e.what());
      result.failures.emplace_back(name, e.what());
    }
  }
  evalkit::save_report_csv(root / "experiment.csv", result.reports);
  std::string text = evalkit::render_table(result.reports);
  for (const auto& [name, why] : result.failures) text += "FAILED " + name + ": " + why + "\n";
  write_text(root / "experiment.txt", text);
  return result;
}

}  // namespace emovc::harness
