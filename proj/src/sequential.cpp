#include "bnbei/sequential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace bnbei {

namespace {

double min_sq_distance(const std::vector<Point>& pts) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      double q = 0.0;
      for (std::size_t k = 0; k < pts[i].size(); ++k) {
        double diff = pts[i][k] - pts[j][k];
        q += diff * diff;
      }
      best = std::min(best, q);
    }
  }
  return best;
}

bool is_duplicate(const std::vector<Point>& design, const Point& x, double tol = 1e-8) {
  for (const auto& p : design) {
    double m = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) m = std::max(m, std::abs(p[k] - x[k]));
    if (m <= tol) return true;
  }
  return false;
}

Point dejitter(const std::vector<Point>& design, Point x, double jitter, Rng& rng) {
  for (int attempt = 0; attempt < 1000 && is_duplicate(design, x); ++attempt) {
    for (double& v : x) v = std::clamp(v + uniform(rng, -jitter, jitter), 0.0, 1.0);
  }
  return x;
}

// Standardized distance of the prediction into the improvement region; -inf
// when s = 0.
double tail_score(const FeatureTarget& target, const BestEstimates& bests, const Prediction& pred) {
  const double s = pred.s();
  if (!(s > 0.0)) return -std::numeric_limits<double>::infinity();
  switch (target.kind) {
    case FeatureKind::Minimum:
      return (bests.fmin - pred.yhat) / s;
    case FeatureKind::MaxMin:
      return std::max(bests.fmin - pred.yhat, pred.yhat - bests.fmax) / s;
    case FeatureKind::ContourFull:
    case FeatureKind::ContourMod:
      return target.alpha - std::abs(target.level - pred.yhat) / s;
  }
  return -std::numeric_limits<double>::infinity();
}

struct Proposal {
  Point x;
  double ei = 0.0;
  std::size_t evals = 0;
  bool fallback = false;
};

Proposal propose(const GPFit& fit, const FeatureTarget& target, const BestEstimates& bests,
                 const SequentialConfig& cfg, const std::vector<Point>& design, Rng& rng) {
  Proposal p;
  if (cfg.optimizer == OptimizerKind::Bnb) {
    BnbConfig bc = cfg.bnb;
    bc.rng_seed = rng();
    auto r = bnb_maximize(fit, target, bests, bc);
    p = {std::move(r.xbest), r.ei_best, r.evals_used, false};
  } else {
    GaConfig gc = cfg.ga;
    gc.rng_seed = rng();
    auto r = ga_maximize(fit, target, bests, gc);
    p = {std::move(r.xbest), r.ei_best, r.evals_used, false};
  }
  if (p.ei > 0.0) return p;

  // Criterion underflowed to zero everywhere. First take the candidate with
  // the best standardized tail score, which orders points the way the
  // criterion does far in its tail; with no spread at all (s = 0), take the
  // largest predictive error, then any unsampled candidate.
  p.fallback = true;
  auto cands = latin_hypercube(1000 * fit.dim(), fit.dim(), rng);
  double best = -std::numeric_limits<double>::infinity();
  const Point* pick = nullptr;
  for (const auto& c : cands) {
    auto pred = fit.predict(c);
    double z = tail_score(target, bests, pred);
    if (z > best && !is_duplicate(design, c)) {
      best = z;
      pick = &c;
    }
  }
  double best_s2 = 0.0;
  for (const auto& c : cands) {
    if (best == -std::numeric_limits<double>::infinity()) {
      double s2 = fit.predict(c).s2;
      if (s2 > best_s2 && !is_duplicate(design, c)) {
        best_s2 = s2;
        pick = &c;
      }
    }
  }
  if (pick == nullptr) {
    for (const auto& c : cands) {
      if (!is_duplicate(design, c)) {
        pick = &c;
        break;
      }
    }
  }
  if (pick != nullptr) p.x = *pick;
  return p;
}

IterationRecord summarize(std::size_t k, const GPFit& fit, const FeatureTarget& target,
                          const SequentialConfig& cfg) {
  IterationRecord rec;
  rec.k = k;
  rec.fmin_est = fit.data().y.minCoeff();
  rec.fmax_est = fit.data().y.maxCoeff();
  rec.sim_evals = fit.data().size();
  if (target.is_contour() && !cfg.contour_points.empty())
    rec.divergence = contour_divergence(fit, cfg.contour_points, target.level);
  return rec;
}

}  // namespace

std::vector<Point> maximin_lhd(std::size_t n, std::size_t dim, std::size_t n_candidates, Rng& rng) {
  if (n < 2) throw ConfigError("maximin_lhd: need at least two points");
  if (n_candidates < 1) throw ConfigError("maximin_lhd: need at least one candidate");
  std::vector<Point> best;
  double best_d = -1.0;
  for (std::size_t c = 0; c < n_candidates; ++c) {
    auto cand = latin_hypercube(n, dim, rng);
    double d = min_sq_distance(cand);
    if (d > best_d) {
      best_d = d;
      best = std::move(cand);
    }
  }
  return best;
}

double min_pairwise_distance(const std::vector<Point>& pts) { return std::sqrt(min_sq_distance(pts)); }

double contour_divergence(const GPFit& fit, const std::vector<Point>& contour_points, double level) {
  if (contour_points.empty()) throw ConfigError("contour_divergence: empty contour point set");
  double sum = 0.0;
  for (const auto& x : contour_points) {
    double e = fit.predict(x).yhat - level;
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(contour_points.size()));
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::Bnb ? "bnb" : "ga"; }

RunTrace run_sequential(const TestFunction& sim, const FeatureTarget& target,
                        const SequentialConfig& config, Rng& rng) {
  auto initial = maximin_lhd(config.n0, sim.dim, config.lhd_candidates, rng);
  return run_sequential_from(sim, target, std::move(initial), config, rng);
}

RunTrace run_sequential_from(const TestFunction& sim, const FeatureTarget& target,
                             std::vector<Point> initial, const SequentialConfig& config, Rng& rng) {
  target.validate();
  if (initial.size() < sim.dim + 2)
    throw ConfigError(fmt::format("run_sequential: initial design needs at least d + 2 = {} points",
                                  sim.dim + 2));
  RunTrace trace;
  trace.design = std::move(initial);
  for (const auto& x : trace.design) trace.responses.push_back(sim(x));

  auto fit_current = [&]() -> std::optional<GPFit> {
    FitOptions fo = config.fit;
    fo.seed = rng();
    try {
      return fit_gp(DesignData::from_points(trace.design, trace.responses), fo);
    } catch (const Error& e) {
      trace.failed = true;
      trace.failure = e.what();
      return std::nullopt;
    }
  };

  auto fit = fit_current();
  if (!fit) return trace;
  trace.records.push_back(summarize(0, *fit, target, config));

  for (std::size_t k = 1; k <= config.n_new; ++k) {
    auto bests = BestEstimates::from_responses(fit->data().y);
    auto prop = propose(*fit, target, bests, config, trace.design, rng);
    Point x = dejitter(trace.design, std::move(prop.x), config.jitter, rng);
    double y = sim(x);
    trace.design.push_back(x);
    trace.responses.push_back(y);

    fit = fit_current();
    if (!fit) return trace;
    IterationRecord rec = summarize(k, *fit, target, config);
    rec.x = std::move(x);
    rec.y = y;
    rec.max_ei = prop.ei;
    rec.ei_evals = prop.evals;
    rec.fallback = prop.fallback;
    trace.records.push_back(std::move(rec));
  }
  return trace;
}

StaticRun static_baseline(const TestFunction& sim, const FeatureTarget& target, std::size_t n0,
                          const std::vector<std::size_t>& k_values, const SequentialConfig& config,
                          Rng& rng) {
  target.validate();
  StaticRun run;
  for (std::size_t k : k_values) {
    const std::size_t n = n0 + k;
    if (n < sim.dim + 2) throw ConfigError("static_baseline: design smaller than d + 2");
    StaticLevel level;
    level.k = k;
    level.design_size = n;
    auto pts = maximin_lhd(n, sim.dim, config.lhd_candidates, rng);
    std::vector<double> y;
    y.reserve(n);
    for (const auto& x : pts) y.push_back(sim(x));
    level.fmin_est = *std::min_element(y.begin(), y.end());
    level.fmax_est = *std::max_element(y.begin(), y.end());
    FitOptions fo = config.fit;
    fo.seed = rng();
    try {
      level.fit = fit_gp(DesignData::from_points(pts, y), fo);
      if (target.is_contour() && !config.contour_points.empty())
        level.divergence = contour_divergence(*level.fit, config.contour_points, target.level);
    } catch (const Error&) {
      level.failed = true;
    }
    run.levels.push_back(std::move(level));
  }
  return run;
}

void write_trace_csv(std::ostream& os, const RunTrace& trace, std::size_t dim,
                     const std::string& run_id, std::uint64_t seed, const std::string& method,
                     bool header) {
  if (header) {
    os << "run_id,seed,method,k";
    for (std::size_t k = 0; k < dim; ++k) os << ",x" << k;
    os << ",y,fmin_est,fmax_est,max_ei,d_k\n";
  }
  for (const auto& r : trace.records) {
    fmt::print(os, "{},{},{},{}", run_id, seed, method, r.k);
    for (std::size_t k = 0; k < dim; ++k) {
      if (r.x.empty())
        os << ",nan";
      else
        fmt::print(os, ",{}", r.x[k]);
    }
    fmt::print(os, ",{},{},{},{},{}\n", r.y, r.fmin_est, r.fmax_est, r.max_ei, r.divergence);
  }
}

}  // namespace bnbei
