#pragma once

#include <string>
#include <utility>

#include "bnbei/gp.hpp"

namespace bnbei {

double normal_pdf(double x);
double normal_cdf(double x);

enum class FeatureKind { Minimum, MaxMin, ContourFull, ContourMod };

// Which feature the expected improvement targets. level/alpha are used by
// the contour kinds only; alpha scales the neighbourhood eps(x) = alpha s(x).
struct FeatureTarget {
  FeatureKind kind = FeatureKind::MaxMin;
  double level = 0.0;
  double alpha = 2.0;

  static FeatureTarget minimum() { return {FeatureKind::Minimum, 0.0, 2.0}; }
  static FeatureTarget max_min() { return {FeatureKind::MaxMin, 0.0, 2.0}; }
  static FeatureTarget contour(double level, double alpha = 2.0, bool modified = true) {
    return {modified ? FeatureKind::ContourMod : FeatureKind::ContourFull, level, alpha};
  }

  bool is_contour() const {
    return kind == FeatureKind::ContourFull || kind == FeatureKind::ContourMod;
  }

  void validate() const;
};

std::string to_string(FeatureKind kind);
FeatureKind parse_feature_kind(const std::string& name);

// Current estimates of the extremes (observed response range).
struct BestEstimates {
  double fmin = 0.0;
  double fmax = 0.0;

  static BestEstimates from_responses(const Eigen::VectorXd& y) {
    return {y.minCoeff(), y.maxCoeff()};
  }
};

// Ranges of the predictor and its standard error over a region.
struct PredBox {
  double yhat_lb = 0.0;
  double yhat_ub = 0.0;
  double s_lb = 0.0;
  double s_ub = 0.0;
};

// E[max(fmin - Y, 0)], Y ~ N(yhat, s^2).
double ei_min(double yhat, double s, double fmin);

// E[max(Y - fmax, fmin - Y, 0)]: the sum of the maximum and minimum criteria.
double ei_maxmin(double yhat, double s, const BestEstimates& bests);

// E[eps^2 - min((Y - a)^2, eps^2)] with eps = alpha s.
double ei_contour_full(double yhat, double s, double level, double alpha);

// Contour criterion without the within-band variance term, s^2 h(t, alpha)
// with t = (level - yhat) / s.
double ei_contour_mod(double yhat, double s, double level, double alpha);

// ei_contour_mod in (t, s) coordinates. Infinite t gives 0.
double ei_contour_mod_ts(double t, double s, double alpha);

struct Partials {
  double d_ds = 0.0;
  double d_dyhat = 0.0;  // for the contour criterion this holds d/dt
};

// d/ds and d/dyhat of ei_maxmin. Throws DerivativeUndefinedError for s <= 0.
Partials d_ei_maxmin(double yhat, double s, const BestEstimates& bests);

struct ContourPartials {
  double d_ds = 0.0;  // at fixed t
  double d_dt = 0.0;  // at fixed s
};

// Partials of ei_contour_mod in (t, s) coordinates.
ContourPartials d_ei_contour_mod_ts(double t, double s, double alpha);
ContourPartials d_ei_contour_mod(double yhat, double s, double level, double alpha);

// Pointwise criterion for any target.
double expected_improvement(const FeatureTarget& target, const BestEstimates& bests, double yhat,
                            double s);

inline double expected_improvement(const FeatureTarget& target, const BestEstimates& bests,
                                   const Prediction& p) {
  return expected_improvement(target, bests, p.yhat, p.s());
}

struct EiBounds {
  double lb = 0.0;
  double ub = 0.0;
};

// Lower/upper bounds of the criterion over every (yhat, s) in the box.
// Throws ConfigError for ContourFull, which has no bound rule.
EiBounds ei_bounds(const FeatureTarget& target, const PredBox& box, const BestEstimates& bests);

}  // namespace bnbei
