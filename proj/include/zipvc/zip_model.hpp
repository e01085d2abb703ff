#pragma once

#include "zipvc/dataset.hpp"

#include <optional>
#include <vector>

namespace zipvc {

enum class Optimizer {
  em,      // EM on the latent susceptibility indicator, finished by Newton steps
  newton,  // damped Newton with backtracking line search
};

struct FitConfig {
  int max_iterations = 200;
  double tolerance = 1e-8;       // max-norm of the score divided by the total weight
  double boundary_eps = 1e-10;   // fitted pi is clamped to [eps, 1 - eps]
  Optimizer optimizer = Optimizer::em;
};

/// A fitted ZIP regression. `pi0` is the probability of the susceptible
/// (Poisson) component; `1 - pi0` is the structural-zero probability.
struct ZipFit {
  VectorXd beta_pi;
  VectorXd beta_lambda;
  VectorXd pi0;
  VectorXd lambda0;
  double loglik = 0.0;
  MatrixXd info;  // observed information for (beta_pi, beta_lambda)
  bool converged = false;
  int iterations = 0;
  double score_norm = 0.0;
  VectorXd weights_used;
  std::vector<double> loglik_trace;  // weighted log-likelihood after each iteration
};

using NullFit = ZipFit;

/// log[(1 - pi) 1{y = 0} + pi e^{-lambda} lambda^y / y!]. Returns -inf for
/// pi = 0 and y > 0; throws InputError for lambda <= 0.
double zip_loglik(double y, double pi, double lambda);

struct ZipDerivatives {
  double loglik = 0.0;
  VectorXd score;  // gradient of the weighted log-likelihood, (beta_pi, beta_lambda) stacked
  MatrixXd info;   // negative Hessian; empty unless requested
};

ZipDerivatives zip_derivatives(const VectorXd& y, const MatrixXd& design_pi, const MatrixXd& design_lambda,
                               const VectorXd& weights, const VectorXd& beta_pi, const VectorXd& beta_lambda,
                               double boundary_eps = 1e-10, bool with_info = true);

/// Maximizes the weighted ZIP log-likelihood with separate designs for the
/// logit(pi) and log(lambda) predictors. `start` stacks (beta_pi, beta_lambda).
ZipFit fit_zip(const VectorXd& y, const MatrixXd& design_pi, const MatrixXd& design_lambda,
               const VectorXd& weights, const FitConfig& config, const std::optional<VectorXd>& start = std::nullopt);

/// [1, X]: the null-model design, intercept first.
MatrixXd null_design(const Dataset& data);

/// Null ZIP fit on covariates only.
NullFit fit_null(const Dataset& data, const VectorXd& weights, const FitConfig& config = {},
                 const std::optional<VectorXd>& start = std::nullopt);

NullFit fit_null(const Dataset& data, const FitConfig& config = {});

}  // namespace zipvc
