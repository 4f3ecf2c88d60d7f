#pragma once

#include <ostream>

#include "bnbei/ei.hpp"

namespace bnbei {

struct GaConfig {
  std::size_t n_init = 25;
  std::size_t n_generations = 5;
  std::size_t n_multistarts = 1;
  double mutation_fraction = 0.05;
  std::size_t ei_eval_budget = 500;
  std::uint64_t rng_seed = 0;

  // Each generation evaluates the augmented pool of 4 * n_init candidates.
  std::size_t evals_required() const { return n_multistarts * n_generations * 4 * n_init; }

  void validate() const;

  // Splits the budget as population x generations x pool factor 4 for one
  // multistart: 25 x 5 for 500 evaluations, 50 x 15 for 3000.
  static GaConfig for_budget(std::size_t budget);
};

// Multiplies each coordinate by (1 + u), u ~ U[-fraction, fraction], then
// clamps to [0,1].
std::vector<Point> mutate(const std::vector<Point>& pop, double fraction, Rng& rng);

// Random disjoint pairs swap a random nonempty subset of coordinates; an odd
// member out is copied unchanged.
std::vector<Point> crossover(const std::vector<Point>& pop, Rng& rng);

struct GaGeneration {
  std::size_t multistart = 0;
  std::size_t generation = 0;
  double best_ei = 0.0;
  std::size_t evals_used = 0;
};

struct GaResult {
  Point xbest;
  double ei_best = 0.0;
  std::size_t evals_used = 0;
  std::vector<GaGeneration> trace;
};

// Multistart GA with truncation selection on the criterion for `target`.
// Throws ConfigError when the budget cannot pay for the configured schedule.
GaResult ga_maximize(const GPFit& fit, const FeatureTarget& target, const BestEstimates& bests,
                     const GaConfig& config);

// multistart,generation,best_ei,evals_used
void write_ga_trace_csv(std::ostream& os, const std::vector<GaGeneration>& trace);

}  // namespace bnbei
