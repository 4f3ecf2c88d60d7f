#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <utility>

#include "bnbei/ei.hpp"

namespace bnbei {

// Axis-aligned box in the unit cube with cached bounds on the minimum of
// g = -EI over the box.
struct Rectangle {
  Point lower;
  Point upper;
  double psi_lb = 0.0;
  double psi_ub = 0.0;
  std::size_t id = 0;  // insertion order, used for tie-breaking

  static Rectangle unit(std::size_t dim) { return {Point(dim, 0.0), Point(dim, 1.0)}; }

  std::size_t dim() const { return lower.size(); }
  double volume() const;
  double longest_edge() const;
  bool contains(std::span<const double> x) const;
};

struct BnbConfig {
  // Absolute termination gap. When unset, relative_epsilon * |U_0| is used.
  std::optional<double> epsilon;
  double relative_epsilon = 1e-3;
  std::size_t ei_eval_budget = 500;
  std::size_t samples_per_rectangle = 10;
  std::uint64_t rng_seed = 0;

  void validate() const;

  // 500 evaluations with 10 samples per rectangle in 2-D, 3000 with 20 in 4-D.
  static BnbConfig for_dimension(std::size_t dim);
};

// Bisects q at the midpoint of a longest edge; ties are broken at random.
// Throws ConfigError for a zero-volume rectangle.
std::pair<Rectangle, Rectangle> split_rectangle(const Rectangle& q, Rng& rng);

// n space-filling points in q: a Latin hypercube within q, preceded by the
// 2^d corners when d <= 4 and n >= 2^(d+1).
std::vector<Point> sample_rectangle(const Rectangle& q, std::size_t n, Rng& rng);

// Observed range of yhat and s over the given predictions.
PredBox pred_box_from(std::span<const Prediction> preds);

// Range of yhat and s over n_samples sampled points of q.
PredBox estimate_pred_box(const GPFit& fit, const Rectangle& q, std::size_t n_samples, Rng& rng);

struct Candidate {
  Point x;
  double ei = 0.0;
};

// What a bound provider reports for one rectangle: bounds on min g over the
// rectangle, the points whose EI it evaluated, and how many evaluations it
// spent.
struct RectangleBound {
  double psi_lb = 0.0;
  double psi_ub = 0.0;
  std::vector<Candidate> candidates;
  std::size_t evals = 0;
};

// Called with a rectangle and the number of EI evaluations it may spend.
using RectangleBounder =
    std::function<RectangleBound(const Rectangle&, std::size_t allowance, Rng& rng)>;

struct BnbIteration {
  std::size_t iteration = 0;
  std::size_t list_size = 0;
  double L = 0.0;
  double U = 0.0;
  double incumbent_ei = 0.0;
  std::size_t evals_used = 0;
  std::size_t pruned = 0;  // rectangles pruned in this iteration
};

struct BnbResult {
  Point xbest;
  double ei_best = 0.0;
  double gap = 0.0;
  std::size_t evals_used = 0;
  bool budget_exhausted = false;
  std::vector<BnbIteration> trace;
  std::vector<Rectangle> live;
  std::vector<Rectangle> pruned;
};

// The branch-and-bound loop on g = -EI over [0,1]^dim with a pluggable bound
// provider. Stops when U - L <= epsilon or the evaluation budget cannot pay
// for two more children.
BnbResult branch_and_bound(std::size_t dim, const RectangleBounder& bounder,
                           const BnbConfig& config);

// Bound provider that samples predictions inside each rectangle and combines
// the observed ranges with ei_bounds.
RectangleBounder sampled_bounder(const GPFit& fit, const FeatureTarget& target,
                                 const BestEstimates& bests);

// Stochastic branch and bound maximizing the criterion for `target`.
// Throws ConfigError for targets without a bound rule.
BnbResult bnb_maximize(const GPFit& fit, const FeatureTarget& target, const BestEstimates& bests,
                       const BnbConfig& config);

// iteration,list_size,L,U,incumbent_ei,evals_used
void write_bnb_trace_csv(std::ostream& os, const std::vector<BnbIteration>& trace);

}  // namespace bnbei
