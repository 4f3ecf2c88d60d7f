#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "bnbei/common.hpp"

namespace bnbei {

// Deterministic test simulator defined on the unit cube. `native_box` records
// the original per-axis interval the unit cube is affinely mapped onto.
struct TestFunction {
  std::string name;
  std::size_t dim = 0;
  std::vector<std::pair<double, double>> native_box;
  std::function<double(std::span<const double>)> eval;

  double operator()(std::span<const double> x) const { return eval(x); }
};

// Branin formula on its native box [0,5]^2.
double branin_native(double x1, double x2);

// Branin with inputs rescaled from [0,1]^2. Throws DomainError outside the cube.
double branin(std::span<const double> x);

// Levy formula on the native box [-10,10]^d, final-term constant fixed to 1.
double levy_native(std::span<const double> z);

// Levy with inputs rescaled from [0,1]^d, d >= 2.
double levy(std::span<const double> x);

TestFunction make_branin();
TestFunction make_levy(std::size_t dim);

// Look up "branin", "levy2", "levy4" (or "levyN").
TestFunction make_test_function(const std::string& name);

// Affine map from the unit cube to the function's native box.
Point to_native(const TestFunction& f, std::span<const double> x);

// Points on the level set {f = level}, each satisfying |f(x) - level| <= tol.
// 2-D: edge crossings on a resolution x resolution grid refined by bisection.
// d > 2: coordinate-line crossings from a resolution^2 Latin-hypercube seed set.
std::vector<Point> discretize_contour(const TestFunction& f, double level, std::size_t resolution,
                                      double tol = 1e-8);

enum class Extremum { Min, Max };

struct OracleResult {
  double value = 0.0;
  Point argpoint;
};

// Exhaustive tensor-grid search; ties go to the lexicographically smallest
// grid index.
OracleResult grid_feature_oracle(const TestFunction& f, Extremum feature, std::size_t resolution);

// Tensor grid plus `n_refine` Latin-hypercube points (used for d = 4 where a
// fine tensor grid is infeasible).
OracleResult refined_feature_oracle(const TestFunction& f, Extremum feature,
                                    std::size_t resolution, std::size_t n_refine,
                                    std::uint64_t seed);

}  // namespace bnbei
