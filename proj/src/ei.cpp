#include "bnbei/ei.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace bnbei {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343818684758586311649;
constexpr double kInvSqrt2 = std::numbers::sqrt2 / 2.0;

// P(lo < Z < hi), computed on whichever tail avoids cancellation.
double normal_interval(double lo, double hi) {
  if (lo >= hi) return 0.0;
  if (lo > 0.0) return 0.5 * (std::erfc(lo * kInvSqrt2) - std::erfc(hi * kInvSqrt2));
  if (hi < 0.0) return 0.5 * (std::erfc(-hi * kInvSqrt2) - std::erfc(-lo * kInvSqrt2));
  return 1.0 - 0.5 * (std::erfc(-lo * kInvSqrt2) + std::erfc(hi * kInvSqrt2));
}

double contour_shape(double t, double alpha) {
  double D = normal_interval(t - alpha, t + alpha);
  double E = normal_pdf(t + alpha) - normal_pdf(t - alpha);
  return (alpha * alpha - t * t) * D - 2.0 * t * E;
}

double t_of(double level, double yhat, double s) {
  double num = level - yhat;
  if (s > 0.0) return num / s;
  if (num == 0.0) return 0.0;
  return num > 0.0 ? std::numeric_limits<double>::infinity()
                   : -std::numeric_limits<double>::infinity();
}

// |t| at which contour_shape peaks. The shape is symmetric and unimodal in
// |t|; the peak sits at 0 when the second-order coefficient at 0 is
// nonpositive (alpha >= ~1.0433), otherwise at some t* in (0, sqrt 2].
double contour_peak(double alpha) {
  const double curvature = -2.0 * normal_interval(-alpha, alpha) +
                           normal_pdf(alpha) * (8.0 * alpha - 2.0 * alpha * alpha * alpha);
  if (curvature <= 0.0) return 0.0;
  thread_local double cached_alpha = std::numeric_limits<double>::quiet_NaN();
  thread_local double cached_peak = 0.0;
  if (alpha == cached_alpha) return cached_peak;
  // Golden-section search on [0, 2].
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 0.0, hi = 2.0;
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = contour_shape(x1, alpha), f2 = contour_shape(x2, alpha);
  while (hi - lo > 1e-12) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = contour_shape(x2, alpha);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = contour_shape(x1, alpha);
    }
  }
  cached_alpha = alpha;
  cached_peak = 0.5 * (lo + hi);
  return cached_peak;
}

}  // namespace

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

void FeatureTarget::validate() const {
  if (!std::isfinite(level)) throw ConfigError("feature target: contour level must be finite");
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw ConfigError("feature target: alpha must be positive");
}

std::string to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::Minimum:
      return "min";
    case FeatureKind::MaxMin:
      return "maxmin";
    case FeatureKind::ContourFull:
      return "contour-full";
    case FeatureKind::ContourMod:
      return "contour-mod";
  }
  return "unknown";
}

FeatureKind parse_feature_kind(const std::string& name) {
  if (name == "min" || name == "minimum") return FeatureKind::Minimum;
  if (name == "maxmin") return FeatureKind::MaxMin;
  if (name == "contour-full" || name == "contour_full") return FeatureKind::ContourFull;
  if (name == "contour-mod" || name == "contour_mod" || name == "contour")
    return FeatureKind::ContourMod;
  throw ConfigError("unknown feature target: " + name);
}

double ei_min(double yhat, double s, double fmin) {
  double gain = fmin - yhat;
  if (!(s > 0.0)) return std::max(gain, 0.0);
  double u = gain / s;
  return std::max(0.0, s * normal_pdf(u) + gain * normal_cdf(u));
}

double ei_maxmin(double yhat, double s, const BestEstimates& bests) {
  if (!(s > 0.0)) return std::max({yhat - bests.fmax, bests.fmin - yhat, 0.0});
  double u1 = (yhat - bests.fmax) / s;
  double u2 = (bests.fmin - yhat) / s;
  double v = s * normal_pdf(u1) + (yhat - bests.fmax) * normal_cdf(u1) + s * normal_pdf(u2) +
             (bests.fmin - yhat) * normal_cdf(u2);
  return std::max(0.0, v);
}

double ei_contour_full(double yhat, double s, double level, double alpha) {
  if (!(s > 0.0)) return 0.0;
  const double eps = alpha * s;
  const double gap = level - yhat;
  const double u1 = (gap + eps) / s;
  const double u2 = (gap - eps) / s;
  const double p1 = normal_pdf(u1), p2 = normal_pdf(u2);
  const double mass = normal_interval(u2, u1);
  // Integral of w^2 phi(w) over [u2, u1]; antiderivative Phi(w) - w phi(w).
  const double second_moment = mass - (u1 * p1 - u2 * p2);
  double v = (eps * eps - gap * gap) * mass - 2.0 * gap * s * (p1 - p2) - s * s * second_moment;
  return std::max(0.0, v);
}

double ei_contour_mod_ts(double t, double s, double alpha) {
  if (!(s > 0.0) || !std::isfinite(t)) return 0.0;
  return std::max(0.0, s * s * contour_shape(t, alpha));
}

double ei_contour_mod(double yhat, double s, double level, double alpha) {
  if (!(s > 0.0)) return 0.0;
  return ei_contour_mod_ts((level - yhat) / s, s, alpha);
}

Partials d_ei_maxmin(double yhat, double s, const BestEstimates& bests) {
  if (!(s > 0.0)) throw DerivativeUndefinedError("d_ei_maxmin: s must be positive");
  double u1 = (yhat - bests.fmax) / s;
  double u2 = (bests.fmin - yhat) / s;
  return {normal_pdf(u1) + normal_pdf(u2), normal_cdf(u1) - normal_cdf(u2)};
}

ContourPartials d_ei_contour_mod_ts(double t, double s, double alpha) {
  if (!(s > 0.0)) throw DerivativeUndefinedError("d_ei_contour_mod: s must be positive");
  const double D = normal_interval(t - alpha, t + alpha);
  const double E = normal_pdf(t + alpha) - normal_pdf(t - alpha);
  const double F = normal_pdf(t + alpha) + normal_pdf(t - alpha);
  const double a2 = alpha * alpha;
  const double s2 = s * s;
  ContourPartials out;
  out.d_dt = -2.0 * s2 * t * D + 2.0 * alpha * s2 * t * F + s2 * (a2 + t * t - 2.0) * E;
  out.d_ds = 2.0 * s * (a2 - t * t) * D - 4.0 * t * s * E;
  return out;
}

ContourPartials d_ei_contour_mod(double yhat, double s, double level, double alpha) {
  if (!(s > 0.0)) throw DerivativeUndefinedError("d_ei_contour_mod: s must be positive");
  return d_ei_contour_mod_ts((level - yhat) / s, s, alpha);
}

double expected_improvement(const FeatureTarget& target, const BestEstimates& bests, double yhat,
                            double s) {
  switch (target.kind) {
    case FeatureKind::Minimum:
      return ei_min(yhat, s, bests.fmin);
    case FeatureKind::MaxMin:
      return ei_maxmin(yhat, s, bests);
    case FeatureKind::ContourFull:
      return ei_contour_full(yhat, s, target.level, target.alpha);
    case FeatureKind::ContourMod:
      return ei_contour_mod(yhat, s, target.level, target.alpha);
  }
  return 0.0;
}

EiBounds ei_bounds(const FeatureTarget& target, const PredBox& box, const BestEstimates& bests) {
  switch (target.kind) {
    case FeatureKind::Minimum:
      return {ei_min(box.yhat_ub, box.s_lb, bests.fmin), ei_min(box.yhat_lb, box.s_ub, bests.fmin)};

    case FeatureKind::MaxMin: {
      double lb = std::min(ei_maxmin(box.yhat_lb, box.s_lb, bests),
                           ei_maxmin(box.yhat_ub, box.s_lb, bests));
      double ub = std::max(ei_maxmin(box.yhat_lb, box.s_ub, bests),
                           ei_maxmin(box.yhat_ub, box.s_ub, bests));
      return {std::min(lb, ub), ub};
    }

    case FeatureKind::ContourMod: {
      const double a = target.level;
      // t = (a - yhat)/s is not monotone in s when a - yhat changes sign, so
      // take the hull of all four corners.
      const double corners[4] = {t_of(a, box.yhat_lb, box.s_lb), t_of(a, box.yhat_lb, box.s_ub),
                                 t_of(a, box.yhat_ub, box.s_lb), t_of(a, box.yhat_ub, box.s_ub)};
      const double t_lb = *std::min_element(std::begin(corners), std::end(corners));
      const double t_ub = *std::max_element(std::begin(corners), std::end(corners));
      const double alpha = target.alpha;
      // Symmetric in t and unimodal in |t| with its peak at |t| = t*: the
      // minimum over [t_lb, t_ub] is at an endpoint or at 0 (a local minimum
      // when t* > 0); the maximum is at the point whose |t| is nearest t*.
      const double peak = contour_peak(alpha);
      double lb = std::min(ei_contour_mod_ts(t_lb, box.s_lb, alpha),
                           ei_contour_mod_ts(t_ub, box.s_lb, alpha));
      if (peak > 0.0 && t_lb < 0.0 && t_ub > 0.0)
        lb = std::min(lb, ei_contour_mod_ts(0.0, box.s_lb, alpha));
      double ub = std::max(ei_contour_mod_ts(std::clamp(peak, t_lb, t_ub), box.s_ub, alpha),
                           ei_contour_mod_ts(std::clamp(-peak, t_lb, t_ub), box.s_ub, alpha));
      return {std::min(lb, ub), ub};
    }

    case FeatureKind::ContourFull:
      break;
  }
  throw ConfigError("ei_bounds: no bound rule for the full contour criterion");
}

}  // namespace bnbei
