#include <algorithm>

#include "bnbei/common.hpp"

namespace bnbei {

std::vector<Point> latin_hypercube(std::size_t n, std::span<const double> lower,
                                   std::span<const double> upper, Rng& rng) {
  const std::size_t d = lower.size();
  std::vector<Point> pts(n, Point(d));
  std::vector<std::size_t> perm(n);
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    shuffle(perm, rng);
    const double width = upper[k] - lower[k];
    for (std::size_t i = 0; i < n; ++i) {
      double u = (static_cast<double>(perm[i]) + uniform01(rng)) / static_cast<double>(n);
      pts[i][k] = std::min(upper[k], lower[k] + width * u);
    }
  }
  return pts;
}

}  // namespace bnbei
