#pragma once

// Minimal static SVG emission for the diagnostic plots: scatter layers,
// line layers, shared axes with rounded tick labels.

#include <string>
#include <vector>

namespace zabs::io {

struct SvgSeries {
  std::vector<double> x, y;
  std::string color = "#222222";
  bool line = false;     // otherwise circles
  double radius = 2.5;
  bool dashed = false;
};

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel,
                    const std::vector<SvgSeries>& series);

}  // namespace zabs::io
