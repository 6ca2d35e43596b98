#pragma once

// Minimal SVG line charts; enough for sweep summaries and beampatterns.

#include <string>
#include <vector>

namespace beamcast {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> lo;  // optional band; empty or same length as y
  std::vector<double> hi;
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;  // ignored unless every plotted value is positive
  int width = 720;
  int height = 440;
};

std::string svg_line_chart(const std::vector<PlotSeries>& series, const PlotOptions& opt);

}  // namespace beamcast
