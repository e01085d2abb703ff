#pragma once

#include <Eigen/Dense>

namespace zipvc {

struct GlmFit {
  Eigen::VectorXd beta;
  Eigen::VectorXd mu;      // fitted means (Poisson) or probabilities (logistic)
  Eigen::MatrixXd info;    // negative Hessian of the weighted log-likelihood
  double loglik = 0.0;     // up to terms constant in beta
  int iterations = 0;
};

struct GlmControl {
  int max_iterations = 100;
  double tolerance = 1e-10;  // on the max-norm of the score divided by total weight
};

/// Weighted Poisson regression with log link, Newton-Raphson with step halving.
GlmFit fit_poisson(const Eigen::VectorXd& y, const Eigen::MatrixXd& design, const Eigen::VectorXd& weights,
                   const GlmControl& control = {}, const Eigen::VectorXd* start = nullptr);

/// Weighted logistic regression on a fractional response t in [0, 1].
GlmFit fit_logistic(const Eigen::VectorXd& t, const Eigen::MatrixXd& design, const Eigen::VectorXd& weights,
                    const GlmControl& control = {}, const Eigen::VectorXd* start = nullptr);

/// Throws InputError when the rows of `design` with positive weight do not have full column rank.
void require_full_rank(const Eigen::MatrixXd& design, const Eigen::VectorXd& weights, const char* what);

}  // namespace zipvc
