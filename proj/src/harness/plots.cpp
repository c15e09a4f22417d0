// SPDX-License-Identifier: Apache-2.0
#include "emovc/harness/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "emovc/error.hpp"
#include "emovc/harness/config.hpp"

namespace emovc::harness {

namespace {

constexpr double kWidth = 720, kHeight = 420;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
const char* kColours[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

std::string render_svg(const Chart& chart) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : chart.series) {
    require(s.x.size() == s.y.size(), "chart series '" + s.label + "' has mismatched x and y");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!(x0 <= x1)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::string o;
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
       "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<!-- config_hash=" + hash_hex(chart.config_hash) + " -->\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + num(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + escape(chart.title) +
       "</text>\n";
  o += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
       "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4, fy = y0 + (y1 - y0) * i / 4;
    o += "<text x=\"" + num(px(fx)) + "\" y=\"" + num(kTop + ph + 16) + "\" text-anchor=\"middle\">" + tick(fx) + "</text>\n";
    o += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(py(fy) + 4) + "\" text-anchor=\"end\">" + tick(fy) + "</text>\n";
    o += "<line x1=\"" + num(kLeft) + "\" x2=\"" + num(kLeft + pw) + "\" y1=\"" + num(py(fy)) + "\" y2=\"" + num(py(fy)) +
         "\" stroke=\"#ddd\"/>\n";
  }
  o += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(kHeight - 10) + "\" text-anchor=\"middle\">" +
       escape(chart.x_label) + "</text>\n";
  o += "<text transform=\"translate(16," + num(kTop + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
       escape(chart.y_label) + "</text>\n";

  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const auto& s = chart.series[k];
    const char* colour = kColours[k % std::size(kColours)];
    std::string d;
    bool pen = false;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        pen = false;
        continue;
      }
      d += (pen ? " L" : " M") + num(px(s.x[i])) + " " + num(py(s.y[i]));
      pen = true;
    }
    if (!d.empty())
      o += "<path d=\"" + d.substr(1) + "\" fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"1.5\"/>\n";
    const double ly = kTop + 14 + 18 * static_cast<double>(k);
    o += "<line x1=\"" + num(kLeft + pw + 12) + "\" x2=\"" + num(kLeft + pw + 32) + "\" y1=\"" + num(ly - 4) +
         "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + colour + "\" stroke-width=\"2\"/>\n";
    o += "<text x=\"" + num(kLeft + pw + 36) + "\" y=\"" + num(ly) + "\">" + escape(s.label) + "</text>\n";
  }
  o += "</svg>\n";
  return o;
}

void write_svg(const std::filesystem::path& path, const Chart& chart) {
  std::ofstream os(path);
  os << render_svg(chart);
  if (!os) fail(ErrorCode::io, "cannot write plot " + path.string());
}

Chart loss_chart(const std::vector<trainer::LossRecord>& losses, std::uint64_t config_hash) {
  Chart c{"Training losses", "step", "loss", {}, config_hash};
  Series cyc{"cycle", {}, {}}, emo{"emotion", {}, {}}, ab{"adv A->B", {}, {}}, ba{"adv B->A", {}, {}};
  for (const auto& r : losses) {
    const double x = static_cast<double>(r.step);
    for (auto* s : {&cyc, &emo, &ab, &ba}) s->x.push_back(x);
    cyc.y.push_back(r.cyc);
    emo.y.push_back(r.emo);
    ab.y.push_back(r.adv_ab);
    ba.y.push_back(r.adv_ba);
  }
  c.series = {cyc, emo, ab, ba};
  return c;
}

Chart f0_chart(const dsp::FeatureSet& source, const dsp::FeatureSet& converted, std::uint64_t config_hash) {
  Chart c{"F0 before and after conversion", "time [s]", "F0 [Hz]", {}, config_hash};
  auto track = [](const std::string& label, const dsp::FeatureSet& fs) {
    Series s{label, {}, {}};
    for (std::size_t t = 0; t < fs.frames(); ++t) {
      s.x.push_back(static_cast<double>(t) * fs.frame_shift);
      s.y.push_back(fs.voicing[t] ? fs.f0[t] : std::numeric_limits<double>::quiet_NaN());
    }
    return s;
  };
  c.series = {track("source", source), track("converted", converted)};
  return c;
}

}  // namespace emovc::harness
