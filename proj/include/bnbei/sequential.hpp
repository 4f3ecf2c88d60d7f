#pragma once

#include <optional>
#include <ostream>
#include <string>

#include "bnbei/bnb.hpp"
#include "bnbei/ga.hpp"
#include "bnbei/gp.hpp"
#include "bnbei/testbed.hpp"

namespace bnbei {

// Best of n_candidates random Latin hypercubes under the maximin
// (largest minimum pairwise distance) criterion.
std::vector<Point> maximin_lhd(std::size_t n, std::size_t dim, std::size_t n_candidates, Rng& rng);

double min_pairwise_distance(const std::vector<Point>& pts);

// Root-mean-square deviation of the predictor from `level` along the
// discretized true contour. Throws ConfigError for an empty point set.
double contour_divergence(const GPFit& fit, const std::vector<Point>& contour_points, double level);

enum class OptimizerKind { Bnb, Ga };

std::string to_string(OptimizerKind kind);

struct IterationRecord {
  std::size_t k = 0;
  Point x;  // empty for k = 0
  double y = std::numeric_limits<double>::quiet_NaN();
  double fmin_est = 0.0;
  double fmax_est = 0.0;
  double max_ei = std::numeric_limits<double>::quiet_NaN();
  double divergence = std::numeric_limits<double>::quiet_NaN();
  std::size_t sim_evals = 0;
  std::size_t ei_evals = 0;
  bool fallback = false;  // point chosen by the zero-EI fallback rule
};

struct RunTrace {
  std::vector<IterationRecord> records;
  bool failed = false;
  std::string failure;
  std::vector<Point> design;
  std::vector<double> responses;
};

struct SequentialConfig {
  std::size_t n0 = 20;
  std::size_t n_new = 30;
  OptimizerKind optimizer = OptimizerKind::Bnb;
  BnbConfig bnb;
  GaConfig ga;
  FitOptions fit;
  std::size_t lhd_candidates = 1000;
  // Discretized true contour; divergence is reported when nonempty.
  std::vector<Point> contour_points;
  double jitter = 0.005;
};

// Sequential design from an initial maximin LHD of size n0: fit, maximize the
// criterion, evaluate the simulator at the maximizer, augment, repeat n_new
// times. A GP fit failure ends the run with a partial trace and failed = true.
RunTrace run_sequential(const TestFunction& sim, const FeatureTarget& target,
                        const SequentialConfig& config, Rng& rng);

// Same loop starting from a given initial design.
RunTrace run_sequential_from(const TestFunction& sim, const FeatureTarget& target,
                             std::vector<Point> initial, const SequentialConfig& config, Rng& rng);

struct StaticLevel {
  std::size_t k = 0;
  std::size_t design_size = 0;
  double fmin_est = 0.0;
  double fmax_est = 0.0;
  double divergence = std::numeric_limits<double>::quiet_NaN();
  std::optional<GPFit> fit;
  bool failed = false;
};

struct StaticRun {
  std::vector<StaticLevel> levels;
};

// Independent maximin LHD of size n0 + k for every k in k_values.
StaticRun static_baseline(const TestFunction& sim, const FeatureTarget& target, std::size_t n0,
                          const std::vector<std::size_t>& k_values, const SequentialConfig& config,
                          Rng& rng);

// run_id,seed,method,k,x0..x{d-1},y,fmin_est,fmax_est,max_ei,d_k
void write_trace_csv(std::ostream& os, const RunTrace& trace, std::size_t dim,
                     const std::string& run_id, std::uint64_t seed, const std::string& method,
                     bool header = true);

}  // namespace bnbei
