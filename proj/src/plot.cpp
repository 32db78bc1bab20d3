#include "degen/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "degen/errors.hpp"

namespace degen {

namespace {

constexpr std::array<const char*, 6> kColors{"#1f77b4", "#d62728", "#2ca02c",
                                             "#9467bd", "#ff7f0e", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += ch;
    }
  }
  return out;
}

struct Axis {
  bool log = false;
  double lo = 0.0;
  double hi = 1.0;

  double map(double v) const { return log ? std::log10(v) : v; }
  double frac(double v) const { return (map(v) - lo) / (hi - lo); }
  bool usable(double v) const { return std::isfinite(v) && (!log || v > 0.0); }
};

Axis make_axis(bool log, const std::vector<PlotSeries>& series, bool use_x) {
  Axis ax{log, std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double v = use_x ? s.x[i] : s.y[i];
      if (!ax.usable(v)) continue;
      ax.lo = std::min(ax.lo, ax.map(v));
      ax.hi = std::max(ax.hi, ax.map(v));
    }
  }
  if (!std::isfinite(ax.lo)) {
    ax.lo = 0.0;
    ax.hi = 1.0;
  }
  if (ax.hi - ax.lo < 1e-12) {
    ax.lo -= 0.5;
    ax.hi += 0.5;
  }
  return ax;
}

std::string tick_label(const Axis& ax, double mapped) {
  return ax.log ? fmt::format("1e{:.3g}", mapped) : fmt::format("{:.4g}", mapped);
}

}  // namespace

std::string render_svg(const PlotSpec& spec, const std::vector<PlotSeries>& series) {
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw ArgumentError("plot series '" + s.label + "': size mismatch");
  }
  const double left = 70.0;
  const double right = 20.0;
  const double top = 36.0;
  const double bottom = 50.0;
  const double pw = spec.width - left - right;
  const double ph = spec.height - top - bottom;
  const Axis ax = make_axis(spec.log_x, series, true);
  const Axis ay = make_axis(spec.log_y, series, false);

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n",
      spec.width, spec.height);
  svg += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", spec.width, spec.height);
  svg += fmt::format("<text x=\"{:.1f}\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
                     left + pw / 2, escape(spec.title));
  svg += fmt::format(
      "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"none\" "
      "stroke=\"black\"/>\n",
      left, top, pw, ph);

  for (int k = 0; k <= 4; ++k) {
    const double fx = k / 4.0;
    const double mx = ax.lo + fx * (ax.hi - ax.lo);
    const double px = left + fx * pw;
    svg += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{2:.1f}\" stroke=\"#ddd\"/>\n",
                       px, top, top + ph);
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n", px,
                       top + ph + 16, tick_label(ax, mx));
    const double my = ay.lo + fx * (ay.hi - ay.lo);
    const double py = top + ph - fx * ph;
    svg += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" stroke=\"#ddd\"/>\n",
                       left, py, left + pw);
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{}</text>\n", left - 6,
                       py + 4, tick_label(ay, my));
  }
  svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n",
                     left + pw / 2, spec.height - 12.0, escape(spec.xlabel));
  svg += fmt::format(
      "<text x=\"14\" y=\"{0:.1f}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {0:.1f})\">{1}</text>\n",
      top + ph / 2, escape(spec.ylabel));

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kColors[si % kColors.size()];
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!ax.usable(s.x[i]) || !ay.usable(s.y[i])) continue;
      const double px = left + ax.frac(s.x[i]) * pw;
      const double py = top + ph - ay.frac(s.y[i]) * ph;
      pts += fmt::format("{:.2f},{:.2f} ", px, py);
    }
    if (!pts.empty()) pts.pop_back();
    svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                       color, pts);
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" fill=\"{}\">{}</text>\n", left + 8,
                       top + 14 + 14.0 * static_cast<double>(si), color, escape(s.label));
  }
  svg += "</svg>\n";
  return svg;
}

void write_svg(const std::filesystem::path& path, const PlotSpec& spec,
               const std::vector<PlotSeries>& series) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << render_svg(spec, series);
}

}  // namespace degen
