// SPDX-License-Identifier: Apache-2.0
#include "emovc/evalkit/evaluate.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "emovc/error.hpp"

namespace emovc::evalkit {

namespace {
const double kNaN = std::numeric_limits<double>::quiet_NaN();

bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }
}  // namespace

bool UtteranceMetrics::operator==(const UtteranceMetrics& o) const {
  return name == o.name && same(mcd, o.mcd) && same(logf0_mse, o.logf0_mse) && logf0_used == o.logf0_used &&
         logf0_excluded == o.logf0_excluded && same(f0_source, o.f0_source) && same(f0_target, o.f0_target) &&
         same(f0_converted, o.f0_converted) && same(probe_b, o.probe_b) && probe_hit == o.probe_hit;
}

double mean_voiced_f0(const dsp::FeatureSet& fs) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < fs.frames(); ++t)
    if (fs.voicing[t]) {
      s += fs.f0[t];
      ++n;
    }
  return n ? s / static_cast<double>(n) : kNaN;
}

void EvalReport::finalize() {
  const double n = static_cast<double>(utterances.size());
  double mcd_sum = 0, lf0_sum = 0, hits = 0, fs = 0, ft = 0, fc = 0;
  std::size_t lf0_n = 0;
  bool probed = false;
  logf0_undefined = 0;
  for (const auto& u : utterances) {
    mcd_sum += u.mcd;
    if (std::isnan(u.logf0_mse)) {
      ++logf0_undefined;
    } else {
      lf0_sum += u.logf0_mse;
      ++lf0_n;
    }
    if (!std::isnan(u.probe_b)) probed = true;
    hits += u.probe_hit;
    fs += u.f0_source;
    ft += u.f0_target;
    fc += u.f0_converted;
  }
  mean_mcd = utterances.empty() ? kNaN : mcd_sum / n;
  mean_logf0_mse = lf0_n ? lf0_sum / static_cast<double>(lf0_n) : kNaN;
  probe_rate = probed ? hits / n : kNaN;
  f0_source = fs / n;
  f0_target = ft / n;
  f0_converted = fc / n;
}

double EvalReport::f0_shift_fraction() const {
  const double gap = f0_target - f0_source;
  return gap != 0 ? (f0_converted - f0_source) / gap : kNaN;
}

EvalReport evaluate(const converter::ModelBundle& bundle, const corpus::CorpusManifest& corpus, const EvalOptions& opt) {
  const bool forward = opt.direction == converter::Direction::a_to_b;
  const std::string from = forward ? bundle.emotion_a : bundle.emotion_b;
  const std::string to = forward ? bundle.emotion_b : bundle.emotion_a;
  for (const auto& e : {from, to})
    if (!corpus.has_emotion(e)) fail(ErrorCode::configuration, "corpus has no emotion '" + e + "'");
  if (opt.split == "train") std::fprintf(stderr, "warning: evaluating on the training split\n");

  const auto sources = corpus::load_utterances(corpus, {from}, {opt.split}, opt.analysis);
  std::map<std::string, dsp::FeatureSet> targets;
  for (auto& u : corpus::load_utterances(corpus, {to}, {opt.split}, opt.analysis)) targets[u.entry.name] = std::move(u.features);

  EvalReport r;
  r.combo = model::combo_name(bundle.combo());
  r.source = from;
  r.target = to;
  r.split = opt.split;
  r.model_hash = bundle.config_hash;
  if (!opt.wav_dir.empty()) std::filesystem::create_directories(opt.wav_dir);
  for (const auto& src : sources) {
    const auto it = targets.find(src.entry.name);
    if (it == targets.end()) continue;
    const auto& tgt = it->second;
    const auto conv = converter::convert_utterance(bundle, src.features, opt.direction, opt.synthesis);
    if (!opt.wav_dir.empty()) dsp::write_wav(opt.wav_dir / (src.entry.name + ".wav"), conv.waveform);

    UtteranceMetrics m;
    m.name = src.entry.name;
    const auto path = dtw_align(tgt.mcc, conv.features.mcc, opt.dtw_band);
    m.mcd = mcd(tgt.mcc, conv.features.mcc, path, opt.exclude_c0);
    const auto lf0 = logf0_mse(tgt.f0, conv.features.f0, tgt.voicing, conv.features.voicing, path);
    m.logf0_mse = lf0.value;
    m.logf0_used = lf0.used;
    m.logf0_excluded = lf0.excluded;
    m.f0_source = mean_voiced_f0(src.features);
    m.f0_target = mean_voiced_f0(tgt);
    // The converted speech is judged after resynthesis and fresh analysis.
    auto extracted = dsp::analyze(conv.waveform, opt.analysis);
    extracted.provenance = "converted";
    m.f0_converted = mean_voiced_f0(extracted);
    m.probe_b = kNaN;
    if (opt.probe) {
      const auto* p = opt.probe;
      require((p->emotion_a() == from && p->emotion_b() == to) || (p->emotion_a() == to && p->emotion_b() == from),
              "probe emotions do not match the conversion pair");
      m.probe_b = p->prob_b(extracted);
      m.probe_hit = (m.probe_b > 0.5 ? p->emotion_b() : p->emotion_a()) == to;
    }
    r.utterances.push_back(std::move(m));
  }
  if (r.utterances.empty())
    fail(ErrorCode::insufficient_input, "no parallel " + from + "/" + to + " utterances in split '" + opt.split + "'");
  r.finalize();
  return r;
}

// --- serialisation ----------------------------------------------------------

namespace {

constexpr const char* kHeader =
    "kind,combo,source,target,split,model_hash,config_hash,name,mcd,logf0_mse,logf0_used,logf0_excluded,f0_source,"
    "f0_target,f0_converted,probe_b,probe_hit";

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_num(const std::string& s) { return s == "nan" ? kNaN : std::stod(s); }

}  // namespace

void write_report_csv(std::ostream& os, const std::vector<EvalReport>& reports) {
  os << kHeader << '\n';
  for (const auto& r : reports) {
    const std::string key = r.combo + ',' + r.source + ',' + r.target + ',' + r.split + ',' + hex(r.model_hash) + ',' +
                            hex(r.config_hash);
    for (const auto& u : r.utterances)
      os << "utt," << key << ',' << u.name << ',' << num(u.mcd) << ',' << num(u.logf0_mse) << ',' << u.logf0_used << ','
         << u.logf0_excluded << ',' << num(u.f0_source) << ',' << num(u.f0_target) << ',' << num(u.f0_converted) << ','
         << num(u.probe_b) << ',' << (u.probe_hit ? 1 : 0) << '\n';
    os << "mean," << key << ",," << num(r.mean_mcd) << ',' << num(r.mean_logf0_mse) << ",," << r.logf0_undefined << ','
       << num(r.f0_source) << ',' << num(r.f0_target) << ',' << num(r.f0_converted) << ',' << num(r.probe_rate) << ",\n";
  }
}

void save_report_csv(const std::filesystem::path& path, const std::vector<EvalReport>& reports) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) fail(ErrorCode::io, "cannot write report " + path.string());
  write_report_csv(os, reports);
  if (!os) fail(ErrorCode::io, "failed writing report " + path.string());
}

std::vector<EvalReport> load_report_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::io, "cannot open report " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != kHeader) fail(ErrorCode::io, "report " + path.string() + " has an unexpected header");
  std::vector<EvalReport> out;
  bool open = false;
  try {
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const auto c = split_csv(line);
      if (c.size() != 17) fail(ErrorCode::io, "malformed report row: " + line);
      if (!open) {
        EvalReport r;
        r.combo = c[1];
        r.source = c[2];
        r.target = c[3];
        r.split = c[4];
        r.model_hash = std::stoull(c[5], nullptr, 16);
        r.config_hash = std::stoull(c[6], nullptr, 16);
        out.push_back(std::move(r));
        open = true;
      }
      auto& r = out.back();
      if (c[0] == "mean") {
        r.finalize();
        open = false;
        continue;
      }
      UtteranceMetrics u;
      u.name = c[7];
      u.mcd = parse_num(c[8]);
      u.logf0_mse = parse_num(c[9]);
      u.logf0_used = std::stoull(c[10]);
      u.logf0_excluded = std::stoull(c[11]);
      u.f0_source = parse_num(c[12]);
      u.f0_target = parse_num(c[13]);
      u.f0_converted = parse_num(c[14]);
      u.probe_b = parse_num(c[15]);
      u.probe_hit = c[16] == "1";
      r.utterances.push_back(std::move(u));
    }
  } catch (const std::logic_error& e) {
    fail(ErrorCode::io, "malformed number in report " + path.string() + ": " + e.what());
  }
  if (open) fail(ErrorCode::io, "report " + path.string() + " ends without an aggregate row");
  return out;
}

std::string render_table(const std::vector<EvalReport>& reports) {
  auto label = [](const std::string& combo) {
    const auto& all = model::all_combos();
    for (std::size_t i = 0; i < all.size(); ++i)
      if (model::combo_name(all[i]) == combo) return "CycleGAN-" + std::to_string(i + 1);
    return std::string("?");
  };
  auto cell = [](double v, const char* fmt) {
    if (std::isnan(v)) return std::string("undefined");
    char buf[32];
    std::snprintf(buf, sizeof buf, fmt, v);
    return std::string(buf);
  };
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-12s %-18s %-20s %10s %10s %8s %9s  %s\n", "Model", "Features", "Conversion", "MCD[dB]",
                "LogF0-MSE", "Probe", "F0 shift", "config");
  os << line << std::string(104, '-') << '\n';
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-12s %-18s %-20s %10s %10s %8s %9s  %s\n", label(r.combo).c_str(), r.combo.c_str(),
                  (r.source + "->" + r.target).c_str(), cell(r.mean_mcd, "%.3f").c_str(),
                  cell(r.mean_logf0_mse, "%.4f").c_str(), cell(r.probe_rate * 100, "%.0f%%").c_str(),
                  cell(r.f0_shift_fraction(), "%.2f").c_str(), hex(r.config_hash).c_str());
    os << line;
  }
  return os.str();
}

}  // namespace emovc::evalkit
