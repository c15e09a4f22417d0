// SPDX-License-Identifier: Apache-2.0
#include "emovc/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "emovc/common/seed.hpp"
#include "emovc/error.hpp"

namespace emovc::harness {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string canonical(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const char* want) {
  fail(ErrorCode::configuration, "config key '" + key + "': '" + value + "' is not " + want);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || p != v.data() + v.size()) bad(key, v, "a non-negative integer");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(out)) bad(key, v, "a finite number");
  return out;
}

bool parse_flag(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad(key, v, "a boolean (true/false)");
}

}  // namespace

const std::vector<KeySpec>& config_keys() {
  using K = KeyKind;
  static const std::vector<KeySpec> keys = {
      {"batch", K::count, "8", "training batch size"},
      {"checkpoint_interval", K::count, "500", "steps between checkpoints (0: final only)"},
      {"combo", K::text, "mcc+lf0cwt+lecwt", "feature combination: mcc | mcc+lf0 | mcc+lf0cwt | mcc+lf0cwt+lecwt"},
      {"combos", K::text, "mcc,mcc+lf0,mcc+lf0cwt,mcc+lf0cwt+lecwt", "combinations run by the experiment matrix"},
      {"corpus", K::path, "corpus", "corpus root directory"},
      {"crop", K::count, "128", "training crop width in frames (multiple of 32)"},
      {"direction", K::text, "a2b", "conversion direction: a2b (source to target) or b2a"},
      {"dtw_band", K::count, "0", "Sakoe-Chiba band for DTW (0: unconstrained)"},
      {"emotions", K::text, "neutral,sad,angry", "emotions rendered by synth-corpus"},
      {"eval_count", K::count, "4", "synthetic utterances per emotion in the eval split"},
      {"exclude_c0", K::flag, "false", "leave the gain coefficient out of MCD"},
      {"input", K::path, "", "input WAV for convert"},
      {"lambda1", K::number, "10", "cycle-consistency weight"},
      {"lambda2", K::number, "1", "emotion-classification weight"},
      {"lr_d", K::number, "1e-4", "discriminator and classifier learning rate"},
      {"lr_g", K::number, "2e-4", "generator learning rate"},
      {"model", K::path, "", "trained model checkpoint"},
      {"out", K::path, "out", "output directory"},
      {"output", K::path, "", "output WAV for convert"},
      {"probe", K::flag, "true", "train and apply the emotion probe during evaluation"},
      {"probe_steps", K::count, "300", "probe training steps"},
      {"report", K::path, "", "report CSV read by the report command"},
      {"resume", K::flag, "false", "continue training from the newest checkpoint"},
      {"rho", K::number, "0.25", "channel-width scale of all networks"},
      {"seed", K::count, "7", "master seed"},
      {"source", K::text, "neutral", "source emotion (side A)"},
      {"split", K::text, "eval", "split scored by evaluate"},
      {"steps", K::count, "2000", "training steps"},
      {"synth_seed", K::count, "7", "seed of the synthetic corpus"},
      {"target", K::text, "angry", "target emotion (side B)"},
      {"train_count", K::count, "52", "synthetic utterances per emotion in the train split"},
      {"val_count", K::count, "4", "synthetic utterances per emotion in the val split"},
      {"wav_dir", K::path, "", "where evaluate writes converted WAVs (empty: not written)"},
  };
  return keys;
}

const KeySpec& key_spec(const std::string& name) {
  const auto key = canonical(name);
  for (const auto& k : config_keys())
    if (k.name == key) return k;
  fail(ErrorCode::configuration, "unknown config key '" + name + "'");
}

RunConfig::RunConfig() {
  for (const auto& k : config_keys()) values_[k.name] = k.default_value;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto& spec = key_spec(key);
  const std::string v = trim(value);
  switch (spec.kind) {
    case KeyKind::count: parse_u64(spec.name, v); break;
    case KeyKind::number: parse_double(spec.name, v); break;
    case KeyKind::flag: parse_flag(spec.name, v); break;
    case KeyKind::text:
    case KeyKind::path: break;
  }
  // Enumerated text keys are checked here so that typos surface as usage errors.
  if (spec.name == "direction" && v != "a2b" && v != "b2a") bad(spec.name, v, "a2b or b2a");
  if (spec.name == "split" && std::find(corpus::kSplits.begin(), corpus::kSplits.end(), v) == corpus::kSplits.end())
    bad(spec.name, v, "train, val or eval");
  if (spec.name == "combo") model::parse_combo(v);
  if (spec.name == "combos") {
    std::stringstream ss(v);
    for (std::string item; std::getline(ss, item, ',');)
      if (!trim(item).empty()) model::parse_combo(trim(item));
  }
  values_[spec.name] = v;
}

void RunConfig::parse_text(const std::string& text, const std::string& origin) {
  std::istringstream is(text);
  std::string line;
  for (std::size_t no = 1; std::getline(is, line); ++no) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::configuration, origin + ":" + std::to_string(no) + ": expected key = value");
    try {
      set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const Error& e) {
      fail(ErrorCode::configuration, origin + ":" + std::to_string(no) + ": " + e.what());
    }
  }
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::io, "cannot read config file " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  parse_text(ss.str(), path.string());
}

const std::string& RunConfig::get(const std::string& key) const { return values_.at(key_spec(key).name); }

std::size_t RunConfig::count(const std::string& key) const { return static_cast<std::size_t>(u64(key)); }
std::uint64_t RunConfig::u64(const std::string& key) const { return parse_u64(key, get(key)); }
double RunConfig::number(const std::string& key) const { return parse_double(key, get(key)); }
bool RunConfig::flag(const std::string& key) const { return parse_flag(key, get(key)); }

std::vector<std::string> RunConfig::list(const std::string& key) const {
  std::vector<std::string> out;
  std::stringstream ss(get(key));
  std::string item;
  while (std::getline(ss, item, ','))
    if (auto t = trim(item); !t.empty()) out.push_back(t);
  return out;
}

std::uint64_t RunConfig::hash() const {
  std::uint64_t h = fnv1a("");
  for (const auto& [k, v] : values_)
    if (key_spec(k).kind != KeyKind::path) h = fnv1a(k + "=" + v + "\n", h);
  return h;
}

std::string RunConfig::dump() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

corpus::SynthSpec synth_spec(const RunConfig& c) {
  corpus::SynthSpec s;
  s.train = c.count("train_count");
  s.val = c.count("val_count");
  s.eval = c.count("eval_count");
  s.seed = c.u64("synth_seed");
  const auto presets = corpus::default_presets();
  s.emotions.clear();
  for (const auto& name : c.list("emotions")) {
    const auto it = std::find_if(presets.begin(), presets.end(), [&](const auto& p) { return p.name == name; });
    if (it == presets.end()) fail(ErrorCode::configuration, "no synthetic preset for emotion '" + name + "'");
    s.emotions.push_back(*it);
  }
  s.validate();
  return s;
}

trainer::TrainingConfig training_config(const RunConfig& c) {
  trainer::TrainingConfig t;
  t.weights.lambda1 = c.number("lambda1");
  t.weights.lambda2 = c.number("lambda2");
  t.crop_width = c.count("crop");
  t.batch_size = c.count("batch");
  t.lr_g = c.number("lr_g");
  t.lr_d = c.number("lr_d");
  t.steps = c.count("steps");
  t.seed = c.u64("seed");
  t.checkpoint_interval = c.count("checkpoint_interval");
  t.rho = c.number("rho");
  t.validate();
  return t;
}

evalkit::ProbeConfig probe_config(const RunConfig& c) {
  evalkit::ProbeConfig p;
  p.steps = c.count("probe_steps");
  p.seed = mix_seed({c.u64("seed"), 0x9806e});
  p.validate();
  return p;
}

converter::Direction direction(const RunConfig& c) {
  const auto& d = c.get("direction");
  if (d == "a2b") return converter::Direction::a_to_b;
  if (d == "b2a") return converter::Direction::b_to_a;
  fail(ErrorCode::configuration, "direction must be a2b or b2a, got '" + d + "'");
}

model::FeatureCombo combo(const RunConfig& c) { return model::parse_combo(c.get("combo")); }

}  // namespace emovc::harness
