#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace bnbei {

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Minimal line chart: axes, zero line, one polyline per series and a legend.
void write_svg_plot(std::ostream& os, const std::string& title, const std::string& xlabel,
                    const std::string& ylabel, const std::vector<SvgSeries>& series);

}  // namespace bnbei
