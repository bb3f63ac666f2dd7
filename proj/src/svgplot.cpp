#include "sfflab/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace sfflab {

namespace {

const char* kPalette[] = {"#1f6feb", "#d1242f", "#1a7f37", "#8250df",
                          "#bf8700", "#0f766e", "#cf222e", "#57606a"};
constexpr int kPaletteSize = 8;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string tick_label(double v, bool log_axis) {
  char buf[32];
  if (log_axis) {
    std::snprintf(buf, sizeof buf, "1e%d", (int)std::lround(v));
  } else {
    std::snprintf(buf, sizeof buf, "%g", v);
  }
  return buf;
}

struct Axis {
  double lo = 0.0, hi = 1.0;  // in plot coordinates (log10 space on log axes)
  bool log = false;

  double place(double v) const { return (v - lo) / (hi - lo); }
};

Axis fit_axis(const std::vector<PlotSeries>& series, bool take_x, bool log_axis) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : series) {
    const auto& vals = take_x ? s.x : s.y;
    for (double v : vals) {
      if (log_axis && v <= 0) continue;
      const double u = log_axis ? std::log10(v) : v;
      lo = std::min(lo, u);
      hi = std::max(hi, u);
    }
  }
  if (!(lo <= hi)) throw std::invalid_argument("no plottable points on an axis");
  if (lo == hi) {  // degenerate range, pad symmetrically
    lo -= log_axis ? 0.5 : (std::abs(lo) > 0 ? 0.1 * std::abs(lo) : 1.0);
    hi += log_axis ? 0.5 : (std::abs(hi) > 0 ? 0.1 * std::abs(hi) : 1.0);
  } else {
    const double pad = 0.03 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  return {lo, hi, log_axis};
}

std::vector<double> axis_ticks(const Axis& ax) {
  std::vector<double> ticks;
  if (ax.log) {
    for (int k = (int)std::ceil(ax.lo); k <= (int)std::floor(ax.hi); ++k)
      ticks.push_back(k);
    // wide ranges get thinned to at most ~12 labels
    if (ticks.size() > 12) {
      const int stride = 1 + (int)ticks.size() / 12;
      std::vector<double> kept;
      for (std::size_t i = 0; i < ticks.size(); i += stride) kept.push_back(ticks[i]);
      ticks = kept;
    }
  } else {
    const double span = ax.hi - ax.lo;
    double step = std::pow(10.0, std::floor(std::log10(span / 5)));
    if (span / step > 10) step *= 2;
    if (span / step > 10) step *= 2.5;
    for (double v = std::ceil(ax.lo / step) * step; v <= ax.hi + 1e-12 * span;
         v += step)
      ticks.push_back(v);
  }
  return ticks;
}

}  // namespace

std::string render_svg(const std::vector<PlotSeries>& series, const PlotOptions& opt) {
  if (series.empty()) throw std::invalid_argument("nothing to plot");
  const Axis ax = fit_axis(series, true, opt.log_x);
  const Axis ay = fit_axis(series, false, opt.log_y);

  const double ml = 72, mr = 18, mt = opt.title.empty() ? 18 : 40, mb = 48;
  const double pw = opt.width - ml - mr, ph = opt.height - mt - mb;
  auto px = [&](double v) { return ml + ax.place(v) * pw; };
  auto py = [&](double v) { return mt + (1.0 - ay.place(v)) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width
      << "\" height=\"" << opt.height << "\" viewBox=\"0 0 " << opt.width << " "
      << opt.height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!opt.title.empty())
    svg << "<text x=\"" << num(ml + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"15\">"
        << escape_xml(opt.title) << "</text>\n";

  for (double v : axis_ticks(ax)) {
    const double x = px(v);
    svg << "<line x1=\"" << num(x) << "\" y1=\"" << num(mt) << "\" x2=\"" << num(x)
        << "\" y2=\"" << num(mt + ph) << "\" stroke=\"#dddddd\"/>\n";
    svg << "<text x=\"" << num(x) << "\" y=\"" << num(mt + ph + 16)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << tick_label(v, ax.log) << "</text>\n";
  }
  for (double v : axis_ticks(ay)) {
    const double y = py(v);
    svg << "<line x1=\"" << num(ml) << "\" y1=\"" << num(y) << "\" x2=\""
        << num(ml + pw) << "\" y2=\"" << num(y) << "\" stroke=\"#dddddd\"/>\n";
    svg << "<text x=\"" << num(ml - 6) << "\" y=\"" << num(y + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << tick_label(v, ay.log) << "</text>\n";
  }
  svg << "<rect x=\"" << num(ml) << "\" y=\"" << num(mt) << "\" width=\"" << num(pw)
      << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"#333333\"/>\n";
  svg << "<text x=\"" << num(ml + pw / 2) << "\" y=\"" << num(opt.height - 10)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
      << escape_xml(opt.x_label) << "</text>\n";
  svg << "<text x=\"16\" y=\"" << num(mt + ph / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
         "transform=\"rotate(-90 16 "
      << num(mt + ph / 2) << ")\">" << escape_xml(opt.y_label) << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const char* color = kPalette[si % kPaletteSize];
    const auto& s = series[si];
    if (s.x.size() != s.y.size())
      throw std::invalid_argument("series '" + s.label + "' has ragged columns");
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double x = s.x[i], y = s.y[i];
      if ((ax.log && x <= 0) || (ay.log && y <= 0)) continue;
      pts.emplace_back(px(ax.log ? std::log10(x) : x), py(ay.log ? std::log10(y) : y));
    }
    if (opt.scatter) {
      for (const auto& [x, y] : pts)
        svg << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y)
            << "\" r=\"3.5\" fill=\"" << color << "\"/>\n";
    } else {
      svg << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.6\" points=\"";
      for (const auto& [x, y] : pts) svg << num(x) << "," << num(y) << " ";
      svg << "\"/>\n";
    }
  }

  double ly = mt + 14;
  for (std::size_t si = 0; si < series.size(); ++si) {
    const char* color = kPalette[si % kPaletteSize];
    const double lx = ml + pw - 180;
    svg << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly - 4) << "\" x2=\""
        << num(lx + 22) << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << num(lx + 28) << "\" y=\"" << num(ly)
        << "\" font-family=\"sans-serif\" font-size=\"12\">"
        << escape_xml(series[si].label) << "</text>\n";
    ly += 16;
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace sfflab
