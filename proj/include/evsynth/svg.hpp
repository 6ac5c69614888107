#pragma once

// Minimal native SVG output: credible-band line charts, a rank heatmap and the
// evidence-network diagram. Output is deterministic text.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "evsynth/network.hpp"
#include "evsynth/text.hpp"

namespace evsynth::svg {

namespace detail {

inline std::string coord(double v) { return text::fixed(v, 2); }

inline std::string header(double w, double h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + coord(w) + "\" height=\"" + coord(h) +
         "\" viewBox=\"0 0 " + coord(w) + " " + coord(h) + "\" font-family=\"sans-serif\" font-size=\"12\">\n"
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

inline std::string label(double x, double y, std::string_view s, std::string_view anchor = "middle",
                         std::string_view extra = "") {
  return "<text x=\"" + coord(x) + "\" y=\"" + coord(y) + "\" text-anchor=\"" + std::string(anchor) + "\"" +
         std::string(extra) + ">" + text::xml_escape(s) + "</text>\n";
}

// "Nice" tick positions covering [lo, hi].
inline std::vector<double> ticks(double lo, double hi, int target = 5) {
  if (!(hi > lo)) return {lo};
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) out.push_back(std::abs(t) < 1e-12 ? 0.0 : t);
  return out;
}

}  // namespace detail

// 11-step sequential ramp, light (index 0) to dark (index 10).
inline const std::vector<std::string>& ramp() {
  static const std::vector<std::string> colors = {"#f7fbff", "#e3eef9", "#cfe1f2", "#b5d4e9", "#93c3df", "#6daed5",
                                                  "#4b97c9", "#2f7ebc", "#1864aa", "#0a4a90", "#08306b"};
  return colors;
}

struct BandSeries {
  std::vector<double> x;
  std::vector<double> mid;
  std::vector<double> lower;
  std::vector<double> upper;
};

// Mean line with a shaded interval band; a dashed guide at y = ref if in range.
inline std::string band_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                             const BandSeries& s, double ref = 1.0) {
  const double w = 640, h = 420, ml = 70, mr = 20, mt = 40, mb = 55;
  const double pw = w - ml - mr, ph = h - mt - mb;
  double x0 = *std::min_element(s.x.begin(), s.x.end()), x1 = *std::max_element(s.x.begin(), s.x.end());
  if (!(x1 > x0)) x1 = x0 + 1.0;
  double y0 = *std::min_element(s.lower.begin(), s.lower.end());
  double y1 = *std::max_element(s.upper.begin(), s.upper.end());
  if (!(y1 > y0)) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return mt + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::string out = detail::header(w, h);
  out += detail::label(w / 2, 22, title, "middle", " font-size=\"15\"");
  out += "<rect x=\"" + detail::coord(ml) + "\" y=\"" + detail::coord(mt) + "\" width=\"" + detail::coord(pw) +
         "\" height=\"" + detail::coord(ph) + "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (double t : detail::ticks(x0, x1)) {
    out += "<line x1=\"" + detail::coord(px(t)) + "\" y1=\"" + detail::coord(mt + ph) + "\" x2=\"" +
           detail::coord(px(t)) + "\" y2=\"" + detail::coord(mt + ph + 5) + "\" stroke=\"#444\"/>\n";
    out += detail::label(px(t), mt + ph + 18, text::num(t, 4));
  }
  for (double t : detail::ticks(y0, y1)) {
    out += "<line x1=\"" + detail::coord(ml - 5) + "\" y1=\"" + detail::coord(py(t)) + "\" x2=\"" +
           detail::coord(ml) + "\" y2=\"" + detail::coord(py(t)) + "\" stroke=\"#444\"/>\n";
    out += detail::label(ml - 8, py(t) + 4, text::num(t, 4), "end");
  }
  out += detail::label(ml + pw / 2, h - 12, x_label);
  out += detail::label(16, mt + ph / 2, y_label, "middle",
                       " transform=\"rotate(-90 16 " + detail::coord(mt + ph / 2) + ")\"");
  if (ref > y0 && ref < y1)
    out += "<line class=\"ref\" x1=\"" + detail::coord(ml) + "\" y1=\"" + detail::coord(py(ref)) + "\" x2=\"" +
           detail::coord(ml + pw) + "\" y2=\"" + detail::coord(py(ref)) +
           "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
  std::string band;
  for (std::size_t i = 0; i < s.x.size(); ++i) band += detail::coord(px(s.x[i])) + "," + detail::coord(py(s.upper[i])) + " ";
  for (std::size_t i = s.x.size(); i-- > 0;) band += detail::coord(px(s.x[i])) + "," + detail::coord(py(s.lower[i])) + " ";
  band.pop_back();
  out += "<polygon class=\"band\" points=\"" + band + "\" fill=\"#6daed5\" fill-opacity=\"0.35\" stroke=\"none\"/>\n";
  std::string line;
  for (std::size_t i = 0; i < s.x.size(); ++i) line += detail::coord(px(s.x[i])) + "," + detail::coord(py(s.mid[i])) + " ";
  line.pop_back();
  out += "<polyline class=\"mean\" points=\"" + line + "\" fill=\"none\" stroke=\"#08306b\" stroke-width=\"2\"/>\n";
  for (std::size_t i = 0; i < s.x.size(); ++i)
    out += "<circle cx=\"" + detail::coord(px(s.x[i])) + "\" cy=\"" + detail::coord(py(s.mid[i])) +
           "\" r=\"3\" fill=\"#08306b\"/>\n";
  out += "</svg>\n";
  return out;
}

// values[row][col], coloured on the 11-step ramp between lo and hi. One
// <rect class="cell"> per value.
inline std::string heatmap(const std::string& title, const std::vector<std::string>& rows,
                           const std::vector<std::string>& cols, const std::vector<std::vector<double>>& values,
                           double lo, double hi, const std::string& legend_label) {
  const double cw = 48, ch = 28, ml = 120, mt = 60, legend = 70;
  const double w = ml + cw * static_cast<double>(cols.size()) + 20;
  const double h = mt + ch * static_cast<double>(rows.size()) + legend;
  const auto& colors = ramp();
  auto bucket = [&](double v) {
    if (!(hi > lo)) return std::size_t{0};
    const double f = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
    return static_cast<std::size_t>(std::lround(f * 10.0));
  };
  std::string out = detail::header(w, h);
  out += detail::label(w / 2, 22, title, "middle", " font-size=\"15\"");
  for (std::size_t c = 0; c < cols.size(); ++c)
    out += detail::label(ml + cw * (static_cast<double>(c) + 0.5), mt - 8, cols[c]);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double y = mt + ch * static_cast<double>(r);
    out += detail::label(ml - 8, y + ch / 2 + 4, rows[r], "end");
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const double v = values[r][c];
      const auto b = bucket(v);
      out += "<rect class=\"cell\" x=\"" + detail::coord(ml + cw * static_cast<double>(c)) + "\" y=\"" +
             detail::coord(y) + "\" width=\"" + detail::coord(cw) + "\" height=\"" + detail::coord(ch) + "\" fill=\"" +
             colors[b] + "\" stroke=\"white\"><title>" + text::xml_escape(rows[r]) + " @ " +
             text::xml_escape(cols[c]) + ": " + text::fixed(v, 2) + "</title></rect>\n";
      out += detail::label(ml + cw * (static_cast<double>(c) + 0.5), y + ch / 2 + 4, text::fixed(v, 1), "middle",
                           b >= 6 ? " fill=\"white\" font-size=\"10\"" : " font-size=\"10\"");
    }
  }
  const double ly = mt + ch * static_cast<double>(rows.size()) + 20;
  for (std::size_t i = 0; i < colors.size(); ++i)
    out += "<rect class=\"swatch\" x=\"" + detail::coord(ml + 16.0 * static_cast<double>(i)) + "\" y=\"" +
           detail::coord(ly) + "\" width=\"16\" height=\"12\" fill=\"" + colors[i] + "\"/>\n";
  out += detail::label(ml, ly + 26, text::num(lo, 4), "start");
  out += detail::label(ml + 16.0 * 11, ly + 26, text::num(hi, 4), "end");
  out += detail::label(ml + 16.0 * 11 + 10, ly + 10, legend_label, "start");
  out += "</svg>\n";
  return out;
}

// Treatments on a circle, node area proportional to exposure, edge width to
// the number of studies; RCT-only edges grey, RWE-only orange, mixed purple.
inline std::string network_diagram(const Network& net) {
  const double w = 560, h = 560, cx = w / 2, cy = h / 2 + 10, radius = 200;
  const auto t = net.treatment_count();
  const auto exposure = exposure_per_treatment(net);
  const double max_e = std::max(1e-300, *std::max_element(exposure.begin(), exposure.end()));
  std::vector<double> x(t), y(t);
  for (std::size_t i = 0; i < t; ++i) {
    const double a = -std::numbers::pi / 2 + 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(t);
    x[i] = cx + radius * std::cos(a);
    y[i] = cy + radius * std::sin(a);
  }
  std::string out = detail::header(w, h);
  out += detail::label(w / 2, 22, "Evidence network (RCT grey, RWE orange, both purple)", "middle",
                       " font-size=\"14\"");
  for (const auto& [pair, c] : comparison_counts(net)) {
    if (c.total() == 0) continue;
    const char* color = c.rwe == 0 ? "#888888" : (c.rct == 0 ? "#e6862b" : "#7b4fa0");
    const auto [a, b] = pair;
    out += "<line class=\"edge\" x1=\"" + detail::coord(x[a]) + "\" y1=\"" + detail::coord(y[a]) + "\" x2=\"" +
           detail::coord(x[b]) + "\" y2=\"" + detail::coord(y[b]) + "\" stroke=\"" + color + "\" stroke-width=\"" +
           detail::coord(1.0 + 1.5 * static_cast<double>(c.total())) + "\"><title>" +
           text::xml_escape(net.treatments[a] + " - " + net.treatments[b]) + ": RCT " + std::to_string(c.rct) +
           ", RWE " + std::to_string(c.rwe) + "</title></line>\n";
    out += detail::label((x[a] + x[b]) / 2, (y[a] + y[b]) / 2 - 4,
                         "RCT:" + std::to_string(c.rct) + "/RWE:" + std::to_string(c.rwe), "middle",
                         " font-size=\"10\" fill=\"#333\"");
  }
  for (std::size_t i = 0; i < t; ++i) {
    const double r = 8.0 + 22.0 * std::sqrt(exposure[i] / max_e);
    out += "<circle class=\"node\" cx=\"" + detail::coord(x[i]) + "\" cy=\"" + detail::coord(y[i]) + "\" r=\"" +
           detail::coord(r) + "\" fill=\"#dbe9f6\" stroke=\"#08306b\"/>\n";
    out += detail::label(x[i], y[i] + r + 14, net.treatments[i]);
  }
  out += "</svg>\n";
  return out;
}

}  // namespace evsynth::svg
