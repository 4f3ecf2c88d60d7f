#include "bnbei/bnb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace bnbei {

double Rectangle::volume() const {
  double v = 1.0;
  for (std::size_t k = 0; k < dim(); ++k) v *= upper[k] - lower[k];
  return v;
}

double Rectangle::longest_edge() const {
  double e = 0.0;
  for (std::size_t k = 0; k < dim(); ++k) e = std::max(e, upper[k] - lower[k]);
  return e;
}

bool Rectangle::contains(std::span<const double> x) const {
  for (std::size_t k = 0; k < dim(); ++k) {
    if (x[k] < lower[k] || x[k] > upper[k]) return false;
  }
  return true;
}

void BnbConfig::validate() const {
  if (epsilon && !(*epsilon >= 0.0)) throw ConfigError("bnb: epsilon must be nonnegative");
  if (!(relative_epsilon >= 0.0)) throw ConfigError("bnb: relative epsilon must be nonnegative");
  if (samples_per_rectangle < 2) throw ConfigError("bnb: need at least 2 samples per rectangle");
  if (ei_eval_budget < samples_per_rectangle)
    throw ConfigError("bnb: budget smaller than one rectangle's sampling cost");
}

BnbConfig BnbConfig::for_dimension(std::size_t dim) {
  BnbConfig c;
  if (dim <= 2) {
    c.ei_eval_budget = 500;
    c.samples_per_rectangle = 10;
  } else {
    c.ei_eval_budget = 3000;
    c.samples_per_rectangle = 20;
  }
  return c;
}

std::pair<Rectangle, Rectangle> split_rectangle(const Rectangle& q, Rng& rng) {
  if (!(q.volume() > 0.0)) throw ConfigError("split_rectangle: zero-volume rectangle");
  const double longest = q.longest_edge();
  std::vector<std::size_t> ties;
  for (std::size_t k = 0; k < q.dim(); ++k) {
    if (q.upper[k] - q.lower[k] == longest) ties.push_back(k);
  }
  const std::size_t axis = ties.size() == 1 ? ties.front() : ties[uniform_index(rng, ties.size())];
  const double mid = 0.5 * (q.lower[axis] + q.upper[axis]);
  Rectangle a{q.lower, q.upper};
  Rectangle b{q.lower, q.upper};
  a.upper[axis] = mid;
  b.lower[axis] = mid;
  return {std::move(a), std::move(b)};
}

std::vector<Point> sample_rectangle(const Rectangle& q, std::size_t n, Rng& rng) {
  const std::size_t d = q.dim();
  std::vector<Point> pts;
  pts.reserve(n);
  const std::size_t n_corners = d <= 4 ? (std::size_t{1} << d) : 0;
  if (n_corners > 0 && n >= 2 * n_corners) {
    for (std::size_t mask = 0; mask < n_corners; ++mask) {
      Point c(d);
      for (std::size_t k = 0; k < d; ++k) c[k] = (mask >> k) & 1U ? q.upper[k] : q.lower[k];
      pts.push_back(std::move(c));
    }
  }
  for (auto& p : latin_hypercube(n - pts.size(), q.lower, q.upper, rng)) pts.push_back(std::move(p));
  return pts;
}

PredBox pred_box_from(std::span<const Prediction> preds) {
  if (preds.empty()) throw ConfigError("pred_box_from: no predictions");
  PredBox box{preds[0].yhat, preds[0].yhat, preds[0].s(), preds[0].s()};
  for (const auto& p : preds.subspan(1)) {
    const double s = p.s();
    box.yhat_lb = std::min(box.yhat_lb, p.yhat);
    box.yhat_ub = std::max(box.yhat_ub, p.yhat);
    box.s_lb = std::min(box.s_lb, s);
    box.s_ub = std::max(box.s_ub, s);
  }
  return box;
}

PredBox estimate_pred_box(const GPFit& fit, const Rectangle& q, std::size_t n_samples, Rng& rng) {
  if (n_samples < 2) throw ConfigError("estimate_pred_box: need at least 2 samples");
  std::vector<Prediction> preds;
  preds.reserve(n_samples);
  for (const auto& x : sample_rectangle(q, n_samples, rng)) preds.push_back(fit.predict(x));
  return pred_box_from(preds);
}

RectangleBounder sampled_bounder(const GPFit& fit, const FeatureTarget& target,
                                 const BestEstimates& bests) {
  if (target.kind == FeatureKind::ContourFull)
    throw ConfigError("bnb: the full contour criterion has no bound rule");
  return [&fit, target, bests](const Rectangle& q, std::size_t allowance, Rng& rng) {
    RectangleBound out;
    auto pts = sample_rectangle(q, allowance, rng);
    std::vector<Prediction> preds;
    preds.reserve(pts.size());
    out.candidates.reserve(pts.size());
    for (auto& x : pts) {
      preds.push_back(fit.predict(x));
      double ei = expected_improvement(target, bests, preds.back());
      out.candidates.push_back({std::move(x), ei});
    }
    auto bounds = ei_bounds(target, pred_box_from(preds), bests);
    out.psi_lb = -bounds.ub;
    out.psi_ub = -bounds.lb;
    out.evals = pts.size();
    return out;
  };
}

BnbResult branch_and_bound(std::size_t dim, const RectangleBounder& bounder,
                           const BnbConfig& config) {
  config.validate();
  Rng rng(config.rng_seed);
  BnbResult res;
  res.ei_best = -std::numeric_limits<double>::infinity();
  std::size_t next_id = 0;

  auto absorb = [&](Rectangle& r, RectangleBound&& b) {
    r.psi_lb = b.psi_lb;
    r.psi_ub = b.psi_ub;
    r.id = next_id++;
    res.evals_used += b.evals;
    for (auto& c : b.candidates) {
      if (c.ei > res.ei_best) {
        res.ei_best = c.ei;
        res.xbest = std::move(c.x);
      }
    }
  };

  std::vector<Rectangle> list;
  list.push_back(Rectangle::unit(dim));
  absorb(list.front(), bounder(list.front(), config.samples_per_rectangle, rng));

  double L = list.front().psi_lb;
  double U = list.front().psi_ub;
  const double eps = config.epsilon.value_or(config.relative_epsilon * std::abs(U));

  auto record = [&](std::size_t k, std::size_t pruned_now) {
    res.trace.push_back({k, list.size(), L, U, res.ei_best, res.evals_used, pruned_now});
  };
  record(0, 0);

  std::size_t k = 0;
  while (U - L > eps) {
    const std::size_t remaining = config.ei_eval_budget - std::min(config.ei_eval_budget, res.evals_used);
    const std::size_t per_child = std::min(config.samples_per_rectangle, remaining / 2);
    if (per_child < 2) {
      res.budget_exhausted = true;
      break;
    }

    // Smallest lower bound; ties by larger volume, then earlier insertion.
    auto pick = std::min_element(list.begin(), list.end(), [](const Rectangle& a, const Rectangle& b) {
      if (a.psi_lb != b.psi_lb) return a.psi_lb < b.psi_lb;
      double va = a.volume(), vb = b.volume();
      if (va != vb) return va > vb;
      return a.id < b.id;
    });
    if (!(pick->volume() > 0.0) || pick->longest_edge() < 1e-12) break;

    Rectangle q = std::move(*pick);
    list.erase(pick);
    auto [first, second] = split_rectangle(q, rng);
    absorb(first, bounder(first, per_child, rng));
    absorb(second, bounder(second, per_child, rng));
    list.push_back(std::move(first));
    list.push_back(std::move(second));

    L = std::numeric_limits<double>::infinity();
    U = std::numeric_limits<double>::infinity();
    for (const auto& r : list) {
      L = std::min(L, r.psi_lb);
      U = std::min(U, r.psi_ub);
    }

    std::size_t pruned_now = 0;
    auto keep_end = std::stable_partition(list.begin(), list.end(),
                                          [U](const Rectangle& r) { return !(r.psi_lb > U); });
    for (auto it = keep_end; it != list.end(); ++it) {
      res.pruned.push_back(std::move(*it));
      ++pruned_now;
    }
    list.erase(keep_end, list.end());

    ++k;
    record(k, pruned_now);
  }

  res.gap = U - L;
  res.live = std::move(list);
  if (res.xbest.empty()) {
    // Nothing finite was evaluated; fall back to the cube centre.
    res.xbest = Point(dim, 0.5);
    res.ei_best = 0.0;
  }
  return res;
}

BnbResult bnb_maximize(const GPFit& fit, const FeatureTarget& target, const BestEstimates& bests,
                       const BnbConfig& config) {
  target.validate();
  return branch_and_bound(fit.dim(), sampled_bounder(fit, target, bests), config);
}

void write_bnb_trace_csv(std::ostream& os, const std::vector<BnbIteration>& trace) {
  os << "iteration,list_size,L,U,incumbent_ei,evals_used\n";
  for (const auto& t : trace) {
    fmt::print(os, "{},{},{},{},{},{}\n", t.iteration, t.list_size, t.L, t.U, t.incumbent_ei,
               t.evals_used);
  }
}

}  // namespace bnbei
