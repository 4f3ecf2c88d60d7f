#include "svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace bnbei {

void write_svg_plot(std::ostream& os, const std::string& title, const std::string& xlabel,
                    const std::string& ylabel, const std::vector<SvgSeries>& series) {
  constexpr double W = 640, H = 420, L = 70, R = 20, T = 40, B = 50;
  constexpr const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    for (double v : s.x) xmin = std::min(xmin, v), xmax = std::max(xmax, v);
    for (double v : s.y) {
      if (std::isfinite(v)) ymin = std::min(ymin, v), ymax = std::max(ymax, v);
    }
  }
  if (!(xmin < xmax)) xmin -= 1, xmax += 1;
  if (!(ymin < ymax)) ymin -= 1, ymax += 1;
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;

  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };

  fmt::print(os,
             "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
             "font-family=\"sans-serif\" font-size=\"12\">\n",
             W, H);
  fmt::print(os, "<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", W, H);
  fmt::print(os, "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n", W / 2,
             title);
  fmt::print(os, "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
             L, T, W - L - R, H - T - B);
  if (ymin < 0 && ymax > 0) {
    fmt::print(os, "<line x1=\"{}\" y1=\"{:.2f}\" x2=\"{}\" y2=\"{:.2f}\" stroke=\"#999\" "
                   "stroke-dasharray=\"4 3\"/>\n",
               L, py(0), W - R, py(0));
  }
  for (int i = 0; i <= 4; ++i) {
    double xv = xmin + (xmax - xmin) * i / 4.0;
    double yv = ymin + (ymax - ymin) * i / 4.0;
    fmt::print(os, "<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{:.3g}</text>\n", px(xv),
               H - B + 16, xv);
    fmt::print(os, "<text x=\"{}\" y=\"{:.2f}\" text-anchor=\"end\">{:.3g}</text>\n", L - 6,
               py(yv) + 4, yv);
  }
  fmt::print(os, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", (L + W - R) / 2,
             H - 12, xlabel);
  fmt::print(os,
             "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
             (T + H - B) / 2, (T + H - B) / 2, ylabel);

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = colors[k % std::size(colors)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (std::isfinite(s.y[i])) fmt::print(os, "{:.2f},{:.2f} ", px(s.x[i]), py(s.y[i]));
    }
    os << "\"/>\n";
    double ly = T + 16 + 16.0 * static_cast<double>(k);
    fmt::print(os, "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
               W - R - 110, ly - 4, W - R - 90, ly - 4, color);
    fmt::print(os, "<text x=\"{}\" y=\"{}\">{}</text>\n", W - R - 84, ly, s.label);
  }
  os << "</svg>\n";
}

}  // namespace bnbei
