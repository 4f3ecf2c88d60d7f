#include "bnbei/gp.hpp"

#include <algorithm>
#include <numbers>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

namespace bnbei {

namespace {

constexpr double kPenalty = 1e300;

Eigen::LLT<Eigen::MatrixXd> factorize(const Eigen::MatrixXd& R) {
  Eigen::LLT<Eigen::MatrixXd> llt(R);
  if (llt.info() != Eigen::Success)
    throw IllConditionedError("correlation matrix is not positive definite");
  const auto& L = llt.matrixLLT();
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    if (!(L(i, i) > 0.0) || !std::isfinite(L(i, i)))
      throw IllConditionedError("correlation matrix factor has a non-positive pivot");
  }
  return llt;
}

struct ClosedForm {
  double mu;
  double sigma2;
  double ones_quad;
  Eigen::VectorXd resid_weights;
  Eigen::VectorXd ones_weights;
};

ClosedForm closed_form(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::VectorXd& y) {
  const Eigen::Index n = y.size();
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd ow = llt.solve(ones);
  Eigen::VectorXd yw = llt.solve(y);
  double ones_quad = ones.dot(ow);
  double mu = ones.dot(yw) / ones_quad;
  Eigen::VectorXd resid = y - Eigen::VectorXd::Constant(n, mu);
  Eigen::VectorXd rw = llt.solve(resid);
  double sigma2 = std::max(0.0, resid.dot(rw) / static_cast<double>(n));
  return {mu, sigma2, ones_quad, std::move(rw), std::move(ow)};
}

double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

double nll_from(double sigma2, double logdet, std::size_t n) {
  if (sigma2 <= 0.0) return kDegenerateNll;
  const double nd = static_cast<double>(n);
  return 0.5 * (nd * std::log(2.0 * std::numbers::pi * sigma2) + logdet + nd);
}

bool is_constant(const Eigen::VectorXd& y) { return y.maxCoeff() == y.minCoeff(); }

struct Objective {
  const DesignData* data;
  const ThetaBox* box;
  double delta;
};

Eigen::VectorXd theta_from_log(const gsl_vector* v, const ThetaBox& box) {
  Eigen::VectorXd theta(box.lower.size());
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    double lo = std::log(box.lower[k]), hi = std::log(box.upper[k]);
    theta[k] = std::exp(std::clamp(gsl_vector_get(v, static_cast<std::size_t>(k)), lo, hi));
  }
  return theta;
}

double objective(const gsl_vector* v, void* params) {
  const auto& obj = *static_cast<const Objective*>(params);
  try {
    double nll = profile_neg_log_likelihood(*obj.data, theta_from_log(v, *obj.box), obj.delta);
    return std::isfinite(nll) ? nll : kPenalty;
  } catch (const IllConditionedError&) {
    return kPenalty;
  }
}

struct LocalResult {
  Eigen::VectorXd log_theta;
  double value;
};

LocalResult nelder_mead(Objective& obj, const Eigen::VectorXd& start, double step) {
  const std::size_t d = static_cast<std::size_t>(start.size());
  gsl_vector* x = gsl_vector_alloc(d);
  gsl_vector* ss = gsl_vector_alloc(d);
  for (std::size_t k = 0; k < d; ++k) {
    gsl_vector_set(x, k, start[static_cast<Eigen::Index>(k)]);
    gsl_vector_set(ss, k, step);
  }
  gsl_multimin_function fn{&objective, d, &obj};
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, d);
  gsl_multimin_fminimizer_set(s, &fn, x, ss);
  for (int iter = 0; iter < 400; ++iter) {
    if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), 1e-6) == GSL_SUCCESS) break;
  }
  LocalResult out{Eigen::VectorXd(start.size()), s->fval};
  for (std::size_t k = 0; k < d; ++k)
    out.log_theta[static_cast<Eigen::Index>(k)] = gsl_vector_get(s->x, k);
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(ss);
  gsl_vector_free(x);
  return out;
}

struct GslErrorsOff {
  GslErrorsOff() { gsl_set_error_handler_off(); }
};

}  // namespace

void DesignData::validate() const {
  if (X.rows() < 2) throw ConfigError("design needs at least two points");
  if (y.size() != X.rows()) throw ConfigError("design and response sizes differ");
  if (!X.allFinite() || !y.allFinite()) throw DomainError("design contains non-finite values");
  if ((X.array() < 0.0).any() || (X.array() > 1.0).any())
    throw DomainError("design point outside [0,1]^d");
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < X.rows(); ++j) {
      if ((X.row(i) - X.row(j)).cwiseAbs().maxCoeff() <= 1e-12)
        throw ConfigError("design rows " + std::to_string(i) + " and " + std::to_string(j) +
                          " coincide");
    }
  }
}

DesignData DesignData::from_points(const std::vector<Point>& pts, const std::vector<double>& y) {
  if (pts.size() != y.size()) throw ConfigError("design and response sizes differ");
  if (pts.empty()) throw ConfigError("design needs at least two points");
  for (const auto& p : pts) {
    if (p.size() != pts.front().size()) throw ConfigError("design rows differ in dimension");
  }
  const auto n = static_cast<Eigen::Index>(pts.size());
  const auto d = static_cast<Eigen::Index>(pts.front().size());
  DesignData out{Eigen::MatrixXd(n, d), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) out.X(i, k) = pts[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    out.y[i] = y[static_cast<std::size_t>(i)];
  }
  out.validate();
  return out;
}

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& X, const Eigen::VectorXd& theta,
                                   double delta) {
  if (theta.size() != X.cols()) throw ConfigError("theta dimension does not match design");
  if ((theta.array() <= 0.0).any() || !theta.allFinite())
    throw ConfigError("correlation parameters must be positive");
  if (!(delta >= 0.0 && delta < 1.0)) throw ConfigError("nugget must lie in [0,1)");
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd R(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    R(i, i) = 1.0 + delta;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double q = ((X.row(i) - X.row(j)).array().square() * theta.transpose().array()).sum();
      R(i, j) = R(j, i) = std::exp(-q);
    }
  }
  return R;
}

double profile_neg_log_likelihood(const DesignData& data, const Eigen::VectorXd& theta,
                                  double delta) {
  auto llt = factorize(correlation_matrix(data.X, theta, delta));
  if (is_constant(data.y)) return kDegenerateNll;
  auto cf = closed_form(llt, data.y);
  return nll_from(cf.sigma2, log_det(llt), data.size());
}

GPFit GPFit::build(DesignData data, Eigen::VectorXd theta, double delta) {
  GPFit fit;
  fit.factor_ = factorize(correlation_matrix(data.X, theta, delta));
  auto cf = closed_form(fit.factor_, data.y);
  fit.degenerate_ = is_constant(data.y);
  if (fit.degenerate_) {
    cf.mu = data.y[0];
    cf.sigma2 = 0.0;
    cf.resid_weights.setZero();
  }
  fit.params_ = GPParams{cf.mu, cf.sigma2, std::move(theta), delta};
  fit.resid_weights_ = std::move(cf.resid_weights);
  fit.ones_weights_ = std::move(cf.ones_weights);
  fit.ones_quad_ = cf.ones_quad;
  fit.nll_ = nll_from(cf.sigma2, log_det(fit.factor_), data.size());
  fit.data_ = std::move(data);
  return fit;
}

Prediction GPFit::predict_unclamped(std::span<const double> x) const {
  if (x.size() != dim()) throw DomainError("predict: dimension mismatch");
  require_unit_cube(x, "predict");
  const Eigen::Index n = data_.X.rows();
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double q = 0.0;
    for (Eigen::Index k = 0; k < data_.X.cols(); ++k) {
      double diff = data_.X(i, k) - x[static_cast<std::size_t>(k)];
      q += params_.theta[k] * diff * diff;
    }
    r[i] = std::exp(-q);
  }
  double yhat = params_.mu + r.dot(resid_weights_);
  Eigen::VectorXd v = factor_.matrixL().solve(r);
  double one_minus = 1.0 - ones_weights_.dot(r);
  double s2 = params_.sigma2 * (1.0 - v.squaredNorm() + one_minus * one_minus / ones_quad_);
  return {yhat, s2};
}

Prediction GPFit::predict(std::span<const double> x) const {
  Prediction p = predict_unclamped(x);
  p.s2 = std::max(0.0, p.s2);
  return p;
}

GPFit fit_mle(const DesignData& data, const ThetaBox& box, double delta, int restarts,
              std::uint64_t seed) {
  static const GslErrorsOff gsl_errors_off;
  data.validate();
  const std::size_t d = data.dim();
  if (static_cast<std::size_t>(box.lower.size()) != d ||
      static_cast<std::size_t>(box.upper.size()) != d)
    throw ConfigError("theta box dimension does not match design");
  if ((box.lower.array() <= 0.0).any() || (box.upper.array() < box.lower.array()).any())
    throw ConfigError("theta box must be positive and ordered");
  if (restarts < 1) throw ConfigError("fit_mle: restarts must be positive");

  Eigen::VectorXd log_lo = box.lower.array().log();
  Eigen::VectorXd log_hi = box.upper.array().log();

  if (is_constant(data.y)) {
    Eigen::VectorXd theta = ((log_lo + log_hi) / 2.0).array().exp();
    try {
      return GPFit::build(data, theta, delta);
    } catch (const IllConditionedError& e) {
      throw FitError(std::string("fit_mle: ") + e.what());
    }
  }

  Objective obj{&data, &box, delta};
  Rng rng(seed);
  auto starts = latin_hypercube(static_cast<std::size_t>(restarts),
                                std::span<const double>(log_lo.data(), d),
                                std::span<const double>(log_hi.data(), d), rng);
  const double step = 0.1 * (log_hi - log_lo).maxCoeff() + 1e-3;

  LocalResult best{Eigen::VectorXd(), kPenalty};
  for (const auto& s : starts) {
    Eigen::VectorXd start = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(d));
    auto res = nelder_mead(obj, start, step);
    if (res.value < best.value) best = std::move(res);
  }
  if (!(best.value < kPenalty)) throw FitError("fit_mle: every start failed to factorize");

  // Restarting the simplex at the incumbent guards against premature collapse.
  auto polished = nelder_mead(obj, best.log_theta, 0.05 * step);
  if (polished.value <= best.value) best = std::move(polished);

  Eigen::VectorXd theta(static_cast<Eigen::Index>(d));
  for (Eigen::Index k = 0; k < theta.size(); ++k)
    theta[k] = std::exp(std::clamp(best.log_theta[k], log_lo[k], log_hi[k]));
  try {
    return GPFit::build(data, theta, delta);
  } catch (const IllConditionedError& e) {
    throw FitError(std::string("fit_mle: ") + e.what());
  }
}

GPFit fit_gp(const DesignData& data, const FitOptions& opts) {
  const ThetaBox box = ThetaBox::uniform(data.dim(), opts.theta_lo, opts.theta_hi);
  double delta = opts.delta;
  while (true) {
    try {
      return fit_mle(data, box, delta, opts.restarts, opts.seed);
    } catch (const FitError&) {
      if (delta * 10.0 > opts.max_delta * (1.0 + 1e-9)) throw;
      delta = delta > 0.0 ? delta * 10.0 : 1e-10;
    }
  }
}

}  // namespace bnbei
