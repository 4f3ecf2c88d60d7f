#include "bnbei/ga.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace bnbei {

void GaConfig::validate() const {
  if (n_init < 2) throw ConfigError("ga: population size must be at least 2");
  if (n_generations < 1 || n_multistarts < 1)
    throw ConfigError("ga: generations and multistarts must be positive");
  if (!(mutation_fraction > 0.0 && mutation_fraction <= 0.05))
    throw ConfigError("ga: mutation fraction must lie in (0, 0.05]");
  if (ei_eval_budget < 4 * n_init) throw ConfigError("ga: budget too small for one generation");
  if (evals_required() > ei_eval_budget)
    throw ConfigError(fmt::format("ga: schedule needs {} evaluations, budget is {}",
                                  evals_required(), ei_eval_budget));
}

GaConfig GaConfig::for_budget(std::size_t budget) {
  GaConfig c;
  c.ei_eval_budget = budget;
  if (budget >= 3000) {
    c.n_init = 50;
    c.n_generations = budget / (4 * 50);
  } else {
    c.n_init = 25;
    c.n_generations = std::max<std::size_t>(1, budget / (4 * 25));
  }
  return c;
}

std::vector<Point> mutate(const std::vector<Point>& pop, double fraction, Rng& rng) {
  std::vector<Point> out = pop;
  for (auto& p : out) {
    for (double& v : p) v = std::clamp(v * (1.0 + uniform(rng, -fraction, fraction)), 0.0, 1.0);
  }
  return out;
}

std::vector<Point> crossover(const std::vector<Point>& pop, Rng& rng) {
  std::vector<Point> out = pop;
  if (out.size() < 2) return out;
  const std::size_t d = out.front().size();
  std::vector<std::size_t> order(out.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);
  for (std::size_t i = 0; i + 1 < order.size(); i += 2) {
    Point& a = out[order[i]];
    Point& b = out[order[i + 1]];
    // Nonempty subset of coordinates, uniform over the 2^d - 1 choices.
    std::vector<bool> swap_axis(d, false);
    if (d < 63) {
      std::uint64_t mask = 1 + rng() % ((std::uint64_t{1} << d) - 1);
      for (std::size_t k = 0; k < d; ++k) swap_axis[k] = (mask >> k) & 1U;
    } else {
      bool any = false;
      while (!any) {
        for (std::size_t k = 0; k < d; ++k) any |= (swap_axis[k] = (rng() & 1U) != 0);
      }
    }
    for (std::size_t k = 0; k < d; ++k) {
      if (swap_axis[k]) std::swap(a[k], b[k]);
    }
  }
  return out;
}

GaResult ga_maximize(const GPFit& fit, const FeatureTarget& target, const BestEstimates& bests,
                     const GaConfig& config) {
  config.validate();
  target.validate();
  Rng rng(config.rng_seed);
  GaResult res;
  res.ei_best = -std::numeric_limits<double>::infinity();

  for (std::size_t m = 0; m < config.n_multistarts; ++m) {
    std::vector<Point> pop = latin_hypercube(config.n_init, fit.dim(), rng);
    for (std::size_t g = 0; g < config.n_generations; ++g) {
      std::vector<Point> pool = pop;
      for (auto& p : mutate(pop, config.mutation_fraction, rng)) pool.push_back(std::move(p));
      for (auto& p : crossover(pool, rng)) pool.push_back(std::move(p));

      std::vector<double> ei(pool.size());
      for (std::size_t i = 0; i < pool.size(); ++i)
        ei[i] = expected_improvement(target, bests, fit.predict(pool[i]));
      res.evals_used += pool.size();

      std::vector<std::size_t> order(pool.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return ei[a] > ei[b]; });
      pop.clear();
      for (std::size_t i = 0; i < config.n_init; ++i) pop.push_back(pool[order[i]]);

      if (ei[order[0]] > res.ei_best) {
        res.ei_best = ei[order[0]];
        res.xbest = pool[order[0]];
      }
      res.trace.push_back({m, g, ei[order[0]], res.evals_used});
    }
  }
  return res;
}

void write_ga_trace_csv(std::ostream& os, const std::vector<GaGeneration>& trace) {
  os << "multistart,generation,best_ei,evals_used\n";
  for (const auto& t : trace)
    fmt::print(os, "{},{},{},{}\n", t.multistart, t.generation, t.best_ei, t.evals_used);
}

}  // namespace bnbei
