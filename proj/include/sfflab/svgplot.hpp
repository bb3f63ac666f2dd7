#pragma once

#include <string>
#include <vector>

namespace sfflab {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  std::string title;
  std::string x_label = "t";
  std::string y_label = "F_t";
  bool log_x = true;
  bool log_y = true;
  bool scatter = false;  // markers instead of connected polylines
  int width = 880;
  int height = 560;
};

/** Self-contained SVG panel: framed axes, decade (or linear) ticks and
    gridlines, one colored polyline or marker set per series, legend from the
    series labels. Output depends only on the inputs. On log axes points with
    nonpositive coordinates are dropped. */
std::string render_svg(const std::vector<PlotSeries>& series, const PlotOptions& opt);

}  // namespace sfflab
