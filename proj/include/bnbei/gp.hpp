#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "bnbei/common.hpp"

namespace bnbei {

// n x d inputs in the unit cube and the n observed responses.
struct DesignData {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;

  std::size_t size() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(X.cols()); }

  // Throws DomainError/ConfigError unless n >= 2, rows are distinct and every
  // coordinate lies in [0,1].
  void validate() const;

  static DesignData from_points(const std::vector<Point>& pts, const std::vector<double>& y);
};

struct GPParams {
  double mu = 0.0;
  double sigma2 = 0.0;
  Eigen::VectorXd theta;
  double delta = 0.0;
};

struct Prediction {
  double yhat = 0.0;
  double s2 = 0.0;

  double s() const { return std::sqrt(s2); }
};

// R_ij = exp(-sum_k theta_k (x_ik - x_jk)^2) plus delta on the diagonal.
Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& X, const Eigen::VectorXd& theta,
                                   double delta);

// Returned by profile_neg_log_likelihood when the closed-form variance
// estimate is exactly zero (constant responses): the likelihood is unbounded.
inline constexpr double kDegenerateNll = -std::numeric_limits<double>::infinity();

// Negative log-likelihood of y ~ N(1 mu, sigma2 (R + delta I)) with mu and
// sigma2 profiled out in closed form. Throws IllConditionedError when the
// correlation matrix cannot be factorized.
double profile_neg_log_likelihood(const DesignData& data, const Eigen::VectorXd& theta,
                                  double delta);

// Fitted surrogate. Immutable once built; predict() is safe to call from
// several threads.
class GPFit {
 public:
  // Closed-form mu and sigma2 at the given hyper-parameters. Throws
  // IllConditionedError when R + delta I is not positive definite.
  static GPFit build(DesignData data, Eigen::VectorXd theta, double delta);

  // Best linear unbiased predictor and its MSE, s2 clamped at zero.
  Prediction predict(std::span<const double> x) const;

  // Same as predict() without clamping s2.
  Prediction predict_unclamped(std::span<const double> x) const;

  const DesignData& data() const { return data_; }
  const GPParams& params() const { return params_; }
  std::size_t dim() const { return data_.dim(); }

  // Constant responses: sigma2 is zero and the predictor is flat.
  bool degenerate() const { return degenerate_; }

  double neg_log_likelihood() const { return nll_; }

  const Eigen::LLT<Eigen::MatrixXd>& corr_factor() const { return factor_; }
  const Eigen::VectorXd& resid_weights() const { return resid_weights_; }
  const Eigen::VectorXd& ones_weights() const { return ones_weights_; }

 private:
  GPFit() = default;

  DesignData data_;
  GPParams params_;
  Eigen::LLT<Eigen::MatrixXd> factor_;
  Eigen::VectorXd resid_weights_;  // (R + delta I)^{-1} (y - 1 mu)
  Eigen::VectorXd ones_weights_;   // (R + delta I)^{-1} 1
  double ones_quad_ = 0.0;         // 1' (R + delta I)^{-1} 1
  double nll_ = 0.0;
  bool degenerate_ = false;
};

// Per-dimension search interval for theta.
struct ThetaBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static ThetaBox uniform(std::size_t dim, double lo = 1e-2, double hi = 1e3) {
    return {Eigen::VectorXd::Constant(static_cast<Eigen::Index>(dim), lo),
            Eigen::VectorXd::Constant(static_cast<Eigen::Index>(dim), hi)};
  }
};

// Multistart Nelder-Mead on log(theta) minimizing the profile negative
// log-likelihood. Starts form a Latin hypercube in the log box. Throws
// FitError when no start yields a factorizable correlation matrix.
GPFit fit_mle(const DesignData& data, const ThetaBox& box, double delta, int restarts,
              std::uint64_t seed = 0);

struct FitOptions {
  double theta_lo = 1e-2;
  double theta_hi = 1e3;
  double delta = 1e-6;
  double max_delta = 1e-2;
  int restarts = 5;
  std::uint64_t seed = 0;
};

// fit_mle with the nugget raised x10 after each failure, up to max_delta.
GPFit fit_gp(const DesignData& data, const FitOptions& opts = {});

}  // namespace bnbei
