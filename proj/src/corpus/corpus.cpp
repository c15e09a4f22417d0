// SPDX-License-Identifier: Apache-2.0
#include "emovc/corpus/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

#include "emovc/common/seed.hpp"
#include "emovc/error.hpp"
#include "json.hpp"

namespace emovc::corpus {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::vector<EmotionPreset> default_presets() {
  return {
      {"neutral", 150.0, 2.5, 0.12, 0.0, 4.5},
      {"sad", 105.0, 1.2, 0.04, 0.6, 3.2},
      {"angry", 230.0, 4.5, 0.3, -0.3, 5.8},
  };
}

SynthSpec SynthSpec::full_scale() {
  SynthSpec s;
  s.train = 260;
  s.val = 20;
  s.eval = 20;
  return s;
}

std::size_t SynthSpec::count(const std::string& split) const {
  if (split == "train") return train;
  if (split == "val") return val;
  if (split == "eval") return eval;
  fail(ErrorCode::configuration, "unknown split '" + split + "'");
}

void SynthSpec::validate() const {
  auto bad = [](const std::string& m) { fail(ErrorCode::configuration, "synthetic corpus spec: " + m); };
  if (emotions.size() < 2) bad("need at least two emotion presets");
  if (train < 1 || val < 1 || eval < 1) bad("every split needs at least one utterance");
  if (min_syllables < 1 || max_syllables < min_syllables) bad("invalid syllable count range");
  if (!(sample_rate >= 8000)) bad("sample rate must be at least 8 kHz");
  std::set<std::string> names;
  for (const auto& p : emotions) {
    if (p.name.empty() || !names.insert(p.name).second) bad("emotion names must be unique and non-empty");
    if (!(p.f0_mean > 50 && p.f0_mean < sample_rate / 8)) bad("implausible f0_mean for " + p.name);
    if (!(p.amplitude > 0 && p.amplitude <= 1)) bad("amplitude must lie in (0,1] for " + p.name);
    if (!(p.syllable_rate > 0.5)) bad("syllable_rate too low for " + p.name);
    if (!(std::abs(p.tilt) < 1)) bad("tilt must satisfy |tilt| < 1 for " + p.name);
  }
  for (std::size_t i = 0; i < emotions.size(); ++i)
    for (std::size_t j = i + 1; j < emotions.size(); ++j)
      if (emotions[i].f0_mean == emotions[j].f0_mean || emotions[i].amplitude == emotions[j].amplitude)
        bad("presets " + emotions[i].name + " and " + emotions[j].name + " must differ in F0 mean and energy");
}

// --- synthesis --------------------------------------------------------------

namespace {

struct Vowel {
  double f1, f2, f3;
};
constexpr Vowel kVowels[] = {{730, 1090, 2440}, {270, 2290, 3010}, {300, 870, 2240}, {530, 1840, 2480}, {570, 840, 2410}};

struct Syllable {
  int vowel;
  double weight;
  bool fricative;
  double accent;
};

// Second-order resonator with unity gain at DC.
struct Resonator {
  double y1 = 0, y2 = 0;
  double step(double x, double freq, double bw, double fs) {
    const double r = std::exp(-std::numbers::pi * bw / fs);
    const double c = 2 * r * std::cos(2 * std::numbers::pi * freq / fs);
    const double y = (1 - c + r * r) * x + c * y1 - r * r * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

}  // namespace

dsp::Waveform synthesize_utterance(const SynthSpec& spec, const EmotionPreset& preset, std::size_t index) {
  const double fs = spec.sample_rate;
  // Content (shared by every emotion for the same index) and style draws use separate streams.
  std::mt19937_64 content(mix_seed({spec.seed, 0xC0C0, index}));
  std::mt19937_64 style(mix_seed({spec.seed, fnv1a(preset.name), index}));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);

  const auto n_syll = static_cast<std::size_t>(
      std::uniform_int_distribution<std::size_t>(spec.min_syllables, spec.max_syllables)(content));
  std::vector<Syllable> syll(n_syll);
  for (auto& s : syll) {
    s.vowel = static_cast<int>(std::uniform_int_distribution<int>(0, 4)(content));
    s.weight = 0.75 + 0.5 * u(content);
    s.fricative = u(content) < 0.4;
    s.accent = 0.4 * u(content);
  }
  const auto stressed = std::uniform_int_distribution<std::size_t>(0, n_syll - 1)(content);
  const double slope = 0.6 + 0.4 * u(content);

  const double f0_base = preset.f0_mean * std::pow(2.0, 0.3 * g(style) / 12.0);
  const double rate = preset.syllable_rate * (0.95 + 0.1 * u(style));

  // Timeline, in samples.
  const auto secs = [&](double s) { return static_cast<std::size_t>(std::lround(s * fs)); };
  const std::size_t lead = secs(0.12), gap = secs(0.12 / rate + 0.01), fric_len = secs(0.05);
  struct Span {
    std::size_t fric_begin, voice_begin, voice_end;
  };
  std::vector<Span> spans;
  std::size_t pos = lead;
  for (const auto& s : syll) {
    Span sp{};
    sp.fric_begin = pos;
    if (s.fricative) pos += fric_len;
    sp.voice_begin = pos;
    pos += std::max(secs(0.08), secs(s.weight / rate) - (s.fricative ? fric_len : 0));
    sp.voice_end = pos;
    spans.push_back(sp);
    pos += gap;
  }
  const std::size_t total = pos - gap + lead;

  std::vector<double> voice_amp(total, 0.0), fric_amp(total, 0.0), f0(total, f0_base);
  std::vector<Vowel> formants(total, kVowels[syll.front().vowel]);
  for (std::size_t j = 0; j < n_syll; ++j) {
    const auto& sp = spans[j];
    const double len = static_cast<double>(sp.voice_end - sp.voice_begin);
    const double attack = std::min(0.02 * fs, len / 3), release = std::min(0.03 * fs, len / 3);
    const double bump = j == stressed ? 1.0 : syll[j].accent;
    for (std::size_t n = sp.voice_begin; n < sp.voice_end; ++n) {
      const double a = static_cast<double>(n - sp.voice_begin), b = static_cast<double>(sp.voice_end - n);
      double env = 1.0;
      if (a < attack) env = 0.5 - 0.5 * std::cos(std::numbers::pi * a / attack);
      if (b < release) env = std::min(env, 0.5 - 0.5 * std::cos(std::numbers::pi * b / release));
      voice_amp[n] = env;
      const double x = a / len;
      const double decl = slope * (0.5 - static_cast<double>(n) / static_cast<double>(total));
      f0[n] = f0_base * std::pow(2.0, preset.f0_range / 12.0 * (decl + bump * std::sin(std::numbers::pi * x)));
    }
    for (std::size_t n = sp.fric_begin; n < sp.voice_begin; ++n) {
      const double x = static_cast<double>(n - sp.fric_begin) / static_cast<double>(fric_len);
      fric_amp[n] = 0.35 * std::sin(std::numbers::pi * x);
    }
    // Formant glide from the previous vowel across the first third of the vowel.
    const Vowel to = kVowels[syll[j].vowel];
    const Vowel from = j ? kVowels[syll[j - 1].vowel] : to;
    const std::size_t end = j + 1 < n_syll ? spans[j + 1].fric_begin : total;
    for (std::size_t n = sp.fric_begin; n < end; ++n) {
      const double x = std::clamp(static_cast<double>(n) - static_cast<double>(sp.voice_begin), 0.0, len / 3) / (len / 3);
      formants[n] = {from.f1 + x * (to.f1 - from.f1), from.f2 + x * (to.f2 - from.f2), from.f3 + x * (to.f3 - from.f3)};
    }
  }

  std::vector<double> out(total, 0.0);
  double phase = 0.0, glottal = 0.0, prev_glottal = 0.0, tilt_state = 0.0, prev_in = 0.0;
  std::vector<double> pulses(total + 1, 0.0);
  for (std::size_t n = 0; n < total; ++n) {
    if (voice_amp[n] <= 0) {
      phase = 0.0;
      continue;
    }
    phase += f0[n] / fs;
    if (phase >= 1.0) {
      phase -= 1.0;
      const double frac = std::min(phase * fs / f0[n], 1.0);
      pulses[n] += 1.0 - frac;
      if (n) pulses[n - 1] += frac;
    }
  }
  Resonator r1, r2, r3, rf;
  for (std::size_t n = 0; n < total; ++n) {
    // Leaky-integrated pulses, differentiated: a crude glottal flow derivative.
    glottal = 0.94 * glottal + pulses[n];
    const double source = (glottal - prev_glottal) * voice_amp[n] + 0.02 * g(style) * voice_amp[n];
    prev_glottal = glottal;
    double v = r1.step(source, formants[n].f1, 110, fs);
    v = r2.step(v, formants[n].f2, 150, fs);
    v = r3.step(v, formants[n].f3, 220, fs);
    const double f = rf.step(g(style) * fric_amp[n], 4500, 1200, fs);
    const double x = v + f;
    double y;
    if (preset.tilt >= 0) {
      tilt_state = (1 - preset.tilt) * x + preset.tilt * tilt_state;
      y = tilt_state;
    } else {
      y = x + preset.tilt * prev_in;
    }
    prev_in = x;
    out[n] = y;
  }
  // Loudness is set on the RMS of the voiced stretch (amplitude / 8), with a clip guard.
  double power = 0.0, active = 0.0, peak = 0.0;
  for (std::size_t n = 0; n < total; ++n) {
    if (voice_amp[n] > 0.5) {
      power += out[n] * out[n];
      active += 1;
    }
    peak = std::max(peak, std::abs(out[n]));
  }
  double gain = power > 0 ? 0.125 * preset.amplitude / std::sqrt(power / active) : 0.0;
  gain = std::min(gain, peak > 0 ? 0.95 / peak : 0.0);
  dsp::Waveform w;
  w.sample_rate = fs;
  w.samples.resize(total);
  for (std::size_t n = 0; n < total; ++n) w.samples[n] = out[n] * gain + 3e-4 * g(style);
  return w;
}

// --- manifest ---------------------------------------------------------------

std::vector<ManifestEntry> CorpusManifest::select(const std::string& emotion, const std::string& split) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries)
    if ((emotion.empty() || e.emotion == emotion) && (split.empty() || e.split == split)) out.push_back(e);
  return out;
}

std::size_t CorpusManifest::count(const std::string& emotion, const std::string& split) const {
  return select(emotion, split).size();
}

bool CorpusManifest::has_emotion(const std::string& emotion) const {
  return std::find(emotions.begin(), emotions.end(), emotion) != emotions.end();
}

void CorpusManifest::validate() const {
  if (emotions.empty()) fail(ErrorCode::configuration, "corpus has no emotions");
  for (const auto& em : emotions)
    for (const auto& sp : kSplits)
      if (count(em, sp) == 0)
        fail(ErrorCode::configuration, "corpus emotion '" + em + "' has no utterances in split '" + sp + "'");
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& e : entries) {
    if (!has_emotion(e.emotion)) fail(ErrorCode::configuration, "entry " + e.path + " has undeclared emotion");
    if (std::find(kSplits.begin(), kSplits.end(), e.split) == kSplits.end())
      fail(ErrorCode::configuration, "entry " + e.path + " has unknown split '" + e.split + "'");
    if (!seen.insert({e.emotion, e.name}).second)
      fail(ErrorCode::configuration, "utterance '" + e.name + "' of emotion '" + e.emotion + "' appears in two splits");
  }
}

namespace {

json stats_to_json(const converter::CorpusStats& s) {
  json emotions = json::object();
  for (const auto& [name, e] : s.emotions)
    emotions[name] = {{"lf0", {e.lf0.mean, e.lf0.std}}, {"le", {e.le.mean, e.le.std}}};
  return {{"rows", {{"mean", s.rows.mean}, {"std", s.rows.std}}},
          {"emotions", emotions},
          {"floored_rows", s.floored_rows}};
}

converter::CorpusStats stats_from_json(const std::string& combo, const json& j) {
  converter::CorpusStats s;
  s.combo = model::parse_combo(combo);
  s.rows.mean = j.at("rows").at("mean").get<std::vector<double>>();
  s.rows.std = j.at("rows").at("std").get<std::vector<double>>();
  for (const auto& [name, e] : j.at("emotions").items()) {
    converter::EmotionStats es;
    es.lf0 = {e.at("lf0").at(0).get<double>(), e.at("lf0").at(1).get<double>()};
    es.le = {e.at("le").at(0).get<double>(), e.at("le").at(1).get<double>()};
    s.emotions[name] = es;
  }
  s.floored_rows = j.at("floored_rows").get<std::vector<std::size_t>>();
  return s;
}

}  // namespace

void save_manifest(const fs::path& path, const CorpusManifest& m) {
  json j;
  j["emotions"] = m.emotions;
  j["entries"] = json::array();
  for (const auto& e : m.entries)
    j["entries"].push_back({{"emotion", e.emotion}, {"split", e.split}, {"name", e.name}, {"path", e.path}});
  j["stats"] = json::object();
  for (const auto& [combo, s] : m.stats) j["stats"][combo] = stats_to_json(s);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) fail(ErrorCode::io, "cannot write manifest " + path.string());
  os << j.dump(1) << '\n';
  if (!os) fail(ErrorCode::io, "failed writing manifest " + path.string());
}

CorpusManifest load_manifest(const fs::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::io, "cannot open manifest " + path.string());
  CorpusManifest m;
  m.root = path.parent_path();
  try {
    const json j = json::parse(is);
    m.emotions = j.at("emotions").get<std::vector<std::string>>();
    for (const auto& e : j.at("entries"))
      m.entries.push_back({e.at("emotion").get<std::string>(), e.at("split").get<std::string>(),
                           e.at("name").get<std::string>(), e.at("path").get<std::string>()});
    if (j.contains("stats"))
      for (const auto& [combo, s] : j.at("stats").items()) m.stats[combo] = stats_from_json(combo, s);
  } catch (const json::exception& e) {
    fail(ErrorCode::io, "malformed manifest " + path.string() + ": " + e.what());
  }
  m.validate();
  return m;
}

CorpusManifest generate_synthetic_corpus(const SynthSpec& spec, const fs::path& out_dir) {
  spec.validate();
  CorpusManifest m;
  m.root = out_dir;
  std::size_t index = 0;
  for (const auto& split : kSplits) {
    const std::size_t n = spec.count(split);
    for (std::size_t k = 0; k < n; ++k, ++index) {
      char name[32];
      std::snprintf(name, sizeof name, "utt%04zu", index);
      for (const auto& preset : spec.emotions) {
        const std::string rel = preset.name + "/" + split + "/" + name + ".wav";
        dsp::write_wav(out_dir / rel, synthesize_utterance(spec, preset, index));
        m.entries.push_back({preset.name, split, name, rel});
      }
    }
  }
  for (const auto& p : spec.emotions) m.emotions.push_back(p.name);
  m.validate();
  save_manifest(out_dir / "manifest.json", m);
  return m;
}

CorpusManifest load_corpus(const fs::path& root) {
  if (!fs::is_directory(root)) fail(ErrorCode::configuration, "corpus root " + root.string() + " is not a directory");
  CorpusManifest m;
  m.root = root;
  std::vector<fs::path> dirs;
  for (const auto& d : fs::directory_iterator(root))
    if (d.is_directory() && d.path().filename() != "features") dirs.push_back(d.path());
  std::sort(dirs.begin(), dirs.end());
  for (const auto& dir : dirs) {
    const std::string emotion = dir.filename().string();
    std::size_t found = 0;
    for (const auto& split : kSplits) {
      const fs::path sd = dir / split;
      if (!fs::is_directory(sd))
        fail(ErrorCode::configuration, "corpus emotion '" + emotion + "' is missing split directory " + sd.string());
      std::vector<fs::path> wavs;
      for (const auto& f : fs::directory_iterator(sd))
        if (f.is_regular_file() && f.path().extension() == ".wav") wavs.push_back(f.path());
      std::sort(wavs.begin(), wavs.end());
      for (const auto& w : wavs) {
        try {
          (void)dsp::read_wav(w);
        } catch (const Error& e) {
          m.unreadable.push_back(w.string() + ": " + e.what());
          continue;
        }
        m.entries.push_back({emotion, split, w.stem().string(), emotion + "/" + split + "/" + w.filename().string()});
        ++found;
      }
    }
    if (found == 0) fail(ErrorCode::configuration, "corpus emotion directory " + dir.string() + " contains no WAV files");
    m.emotions.push_back(emotion);
  }
  m.validate();
  return m;
}

CorpusManifest open_corpus(const fs::path& root) {
  return fs::exists(root / "manifest.json") ? load_manifest(root / "manifest.json") : load_corpus(root);
}

// --- features ---------------------------------------------------------------

fs::path feature_path(const CorpusManifest& m, const ManifestEntry& e) {
  return m.root / "features" / e.emotion / e.split / (e.name + ".emfs");
}

namespace {
Utterance analyse_entry(const CorpusManifest& m, const ManifestEntry& e, const dsp::AnalysisConfig& cfg) {
  Utterance u{e, dsp::analyze(dsp::read_wav(m.root / e.path), cfg)};
  u.features.provenance = e.split;
  dsp::save_features(feature_path(m, e), u.features);
  return u;
}

bool wanted(const std::vector<std::string>& filter, const std::string& v) {
  return filter.empty() || std::find(filter.begin(), filter.end(), v) != filter.end();
}
}  // namespace

std::vector<Utterance> extract_features(const CorpusManifest& m, const dsp::AnalysisConfig& cfg) {
  std::vector<Utterance> out;
  for (const auto& e : m.entries) out.push_back(analyse_entry(m, e, cfg));
  return out;
}

std::vector<Utterance> load_utterances(const CorpusManifest& m, const std::vector<std::string>& emotions,
                                       const std::vector<std::string>& splits, const dsp::AnalysisConfig& cfg) {
  std::vector<Utterance> out;
  for (const auto& e : m.entries) {
    if (!wanted(emotions, e.emotion) || !wanted(splits, e.split)) continue;
    const auto path = feature_path(m, e);
    if (fs::exists(path))
      out.push_back({e, dsp::load_features(path)});
    else
      out.push_back(analyse_entry(m, e, cfg));
  }
  return out;
}

converter::CorpusStats compute_stats(const std::vector<Utterance>& utterances, model::FeatureCombo combo,
                                     const std::vector<std::string>& emotions) {
  const auto layout = model::FeatureLayout::for_combo(combo);
  const std::size_t rows = layout.feature_rows();
  std::vector<converter::RawRows> raws;
  std::map<std::string, std::vector<double>> lf0, le;
  for (const auto& u : utterances) {
    if (u.entry.split != "train" || !wanted(emotions, u.entry.emotion)) continue;
    require(u.features.provenance == "train", "compute_stats: training entry " + u.entry.path +
                                                  " carries features tagged '" + u.features.provenance + "'");
    raws.push_back(converter::raw_rows(u.features, combo));
    for (std::size_t t = 0; t < u.features.frames(); ++t)
      if (u.features.voicing[t]) lf0[u.entry.emotion].push_back(std::log(u.features.f0[t]));
    const auto l = converter::log_energy(u.features);
    le[u.entry.emotion].insert(le[u.entry.emotion].end(), l.begin(), l.end());
  }
  if (raws.empty()) fail(ErrorCode::configuration, "compute_stats: no training-split utterances for the requested emotions");

  converter::CorpusStats s;
  s.combo = combo;
  s.rows.mean.assign(layout.height(), 0.0);
  s.rows.std.assign(layout.height(), 1.0);
  double frames = 0;
  for (const auto& r : raws) frames += static_cast<double>(r.rows.cols);
  for (std::size_t row = 0; row < rows; ++row) {
    double sum = 0;
    for (const auto& r : raws)
      for (double v : r.rows.row(row)) sum += v;
    const double mean = sum / frames;
    double var = 0;
    for (const auto& r : raws)
      for (double v : r.rows.row(row)) var += (v - mean) * (v - mean);
    double sd = std::sqrt(var / frames);
    if (!(sd >= converter::kStdFloor)) {
      sd = converter::kStdFloor;
      s.floored_rows.push_back(row);
    }
    s.rows.mean[row] = mean;
    s.rows.std[row] = sd;
  }
  auto stats_of = [](const std::vector<double>& v) {
    if (v.empty()) return prosody::NormStats{0.0, 1.0};
    double mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0;
    for (double x : v) var += (x - mean) * (x - mean);
    return prosody::NormStats{mean, std::max(std::sqrt(var / static_cast<double>(v.size())), converter::kStdFloor)};
  };
  for (const auto& [name, v] : le) s.emotions[name] = {stats_of(lf0[name]), stats_of(v)};
  return s;
}

}  // namespace emovc::corpus
