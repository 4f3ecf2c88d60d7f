#include "bnbei/testbed.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace bnbei {

namespace {

constexpr double kPi = std::numbers::pi;

double bisect_level(const TestFunction& f, double level, const Point& p, const Point& q,
                    double gp, double tol, Point& out) {
  Point mid(p.size());
  double lo = 0.0, hi = 1.0;
  double glo = gp;
  for (int iter = 0; iter < 200; ++iter) {
    double lam = 0.5 * (lo + hi);
    for (std::size_t k = 0; k < p.size(); ++k) mid[k] = p[k] + lam * (q[k] - p[k]);
    double g = f(mid) - level;
    if (std::abs(g) <= tol) {
      out = mid;
      return g;
    }
    if ((g > 0.0) == (glo > 0.0)) {
      lo = lam;
      glo = g;
    } else {
      hi = lam;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

// Appends the crossing on segment [p, q] if f - level changes sign there.
void add_crossing(const TestFunction& f, double level, const Point& p, double gp, const Point& q,
                  double gq, double tol, std::vector<Point>& out) {
  if ((gp > 0.0) == (gq > 0.0)) return;
  if (std::abs(gp) <= tol) {
    out.push_back(p);
    return;
  }
  if (std::abs(gq) <= tol) {
    out.push_back(q);
    return;
  }
  Point root;
  double g = bisect_level(f, level, p, q, gp, tol, root);
  if (!std::isnan(g)) out.push_back(std::move(root));
}

// sin(pi x) reduced to |x| <= 1/2 first, so integer x gives exactly 0.
double sin_pi(double x) {
  const double n = std::round(x);
  const double v = std::sin(kPi * (x - n));
  return std::fmod(n, 2.0) == 0.0 ? v : -v;
}

}  // namespace

double branin_native(double x1, double x2) {
  double a = x2 - 5.1 * x1 * x1 / (4.0 * kPi * kPi) + 5.0 * x1 / kPi - 6.0;
  return a * a + 10.0 * (1.0 - 1.0 / (8.0 * kPi)) * std::cos(x1) + 10.0;
}

double branin(std::span<const double> x) {
  if (x.size() != 2) throw DomainError("branin: expected a 2-D point");
  require_unit_cube(x, "branin");
  return branin_native(5.0 * x[0], 5.0 * x[1]);
}

double levy_native(std::span<const double> z) {
  const std::size_t d = z.size();
  if (d < 2) throw ConfigError("levy: dimension must be at least 2");
  auto w = [&](std::size_t k) { return 1.0 + (z[k] - 1.0) / 4.0; };
  double s = sin_pi(w(0));
  double total = s * s;
  for (std::size_t k = 0; k + 1 < d; ++k) {
    double wk = w(k);
    double sk = std::sin(kPi * wk + 1.0);
    total += (wk - 1.0) * (wk - 1.0) * (1.0 + 10.0 * sk * sk);
  }
  double wd = w(d - 1);
  total += (wd - 1.0) * (wd - 1.0);
  return total;
}

double levy(std::span<const double> x) {
  if (x.size() < 2) throw ConfigError("levy: dimension must be at least 2");
  require_unit_cube(x, "levy");
  Point z(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) z[k] = -10.0 + 20.0 * x[k];
  return levy_native(z);
}

TestFunction make_branin() {
  return TestFunction{"branin", 2, {{0.0, 5.0}, {0.0, 5.0}},
                      [](std::span<const double> x) { return branin(x); }};
}

TestFunction make_levy(std::size_t dim) {
  if (dim < 2) throw ConfigError("levy: dimension must be at least 2");
  return TestFunction{"levy" + std::to_string(dim), dim,
                      std::vector<std::pair<double, double>>(dim, {-10.0, 10.0}),
                      [dim](std::span<const double> x) {
                        if (x.size() != dim) throw DomainError("levy: dimension mismatch");
                        return levy(x);
                      }};
}

TestFunction make_test_function(const std::string& name) {
  if (name == "branin") return make_branin();
  if (name.rfind("levy", 0) == 0 && name.size() > 4) {
    std::size_t dim = 0;
    try {
      dim = std::stoul(name.substr(4));
    } catch (const std::exception&) {
      throw ConfigError("unknown test function: " + name);
    }
    return make_levy(dim);
  }
  throw ConfigError("unknown test function: " + name);
}

Point to_native(const TestFunction& f, std::span<const double> x) {
  Point z(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    auto [lo, hi] = f.native_box.at(k);
    z[k] = lo + (hi - lo) * x[k];
  }
  return z;
}

std::vector<Point> discretize_contour(const TestFunction& f, double level, std::size_t resolution,
                                      double tol) {
  if (resolution < 2) throw ConfigError("discretize_contour: resolution must be >= 2");
  std::vector<Point> out;
  const double h = 1.0 / static_cast<double>(resolution - 1);

  if (f.dim == 2) {
    const std::size_t r = resolution;
    std::vector<double> g(r * r);
    auto node = [&](std::size_t i, std::size_t j) {
      return Point{static_cast<double>(i) * h, static_cast<double>(j) * h};
    };
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < r; ++j) g[i * r + j] = f(node(i, j)) - level;
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < r; ++j) {
        if (i + 1 < r)
          add_crossing(f, level, node(i, j), g[i * r + j], node(i + 1, j), g[(i + 1) * r + j], tol,
                       out);
        if (j + 1 < r)
          add_crossing(f, level, node(i, j), g[i * r + j], node(i, j + 1), g[i * r + j + 1], tol,
                       out);
      }
    }
  } else {
    Rng rng(0x5eed);
    auto seeds = latin_hypercube(resolution * resolution, f.dim, rng);
    for (const auto& p : seeds) {
      double gp = f(p) - level;
      for (std::size_t k = 0; k < f.dim; ++k) {
        Point q = p;
        q[k] = p[k] + h <= 1.0 ? p[k] + h : p[k] - h;
        add_crossing(f, level, p, gp, q, f(q) - level, tol, out);
      }
    }
  }
  if (out.empty()) throw LevelNotAttainedError("discretize_contour: level not attained on grid");
  return out;
}

OracleResult grid_feature_oracle(const TestFunction& f, Extremum feature, std::size_t resolution) {
  if (resolution < 2) throw ConfigError("grid_feature_oracle: resolution must be >= 2");
  const std::size_t d = f.dim;
  const double h = 1.0 / static_cast<double>(resolution - 1);
  std::vector<std::size_t> idx(d, 0);
  Point x(d, 0.0);
  OracleResult best{feature == Extremum::Max ? -std::numeric_limits<double>::infinity()
                                             : std::numeric_limits<double>::infinity(),
                    x};
  bool first = true;
  while (true) {
    for (std::size_t k = 0; k < d; ++k) x[k] = static_cast<double>(idx[k]) * h;
    double v = f(x);
    bool better = feature == Extremum::Max ? v > best.value : v < best.value;
    if (first || better) {
      best = {v, x};
      first = false;
    }
    // Odometer with the last axis fastest: lexicographic order.
    std::size_t k = d;
    while (k > 0) {
      --k;
      if (++idx[k] < resolution) break;
      idx[k] = 0;
      if (k == 0) return best;
    }
  }
}

OracleResult refined_feature_oracle(const TestFunction& f, Extremum feature,
                                    std::size_t resolution, std::size_t n_refine,
                                    std::uint64_t seed) {
  OracleResult best = grid_feature_oracle(f, feature, resolution);
  if (n_refine == 0) return best;
  Rng rng(seed);
  for (const auto& p : latin_hypercube(n_refine, f.dim, rng)) {
    double v = f(p);
    if (feature == Extremum::Max ? v > best.value : v < best.value) best = {v, p};
  }
  return best;
}

}  // namespace bnbei
