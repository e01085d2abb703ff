#pragma once

#include "zipvc/quadform.hpp"
#include "zipvc/resampling.hpp"
#include "zipvc/score.hpp"

#include <string>
#include <vector>

namespace zipvc {

struct MarginalPValues {
  double p_pi = 1.0;
  double p_lambda = 1.0;
  MixtureSpec mixture_pi;      // eigenvalues of the pi block of sigma_hat
  MixtureSpec mixture_lambda;  // eigenvalues of the lambda block
  bool clamped = false;
};

/// p_iota = P(sum mu_k chi2_1 > Q_iota) with mu the eigenvalues of the iota block of sigma_hat.
MarginalPValues marginal_pvalues(const ScoreResult& score, const PerturbationSet& draws, double rel_tol = 1e-10);

/// Imhof p-values of every resampled Q^(b), using the observed block mixtures.
struct DrawPValues {
  VectorXd p_pi;
  VectorXd p_lambda;
};

DrawPValues draw_pvalues(const PerturbationSet& draws, const MixtureSpec& mixture_pi,
                         const MixtureSpec& mixture_lambda);

/// (1 + #{b : draw_b <= observed}) / (B + 1).
double empirical_pvalue(double observed, const VectorXd& draws);

double minp_statistic(double p_pi, double p_lambda);
double fisher_statistic(double p_pi, double p_lambda);

/// Resampling-calibrated min-p and Fisher combination p-values.
double minp_pvalue(double p_pi, double p_lambda, const DrawPValues& draws);
double fisher_pvalue(double p_pi, double p_lambda, const DrawPValues& draws);

struct StandardizedResult {
  double q_std = 0.0;
  double p_std = 1.0;
  double sigma2_pi = 0.0;      // trace of the pi block
  double sigma2_lambda = 0.0;  // trace of the lambda block
  MixtureSpec mixture;         // eigenvalues of D^{-1} sigma_hat D^{-1}
  bool clamped = false;
};

/// Q_std = Q_pi / sigma2_pi + Q_lambda / sigma2_lambda, referred to the
/// chi-square mixture given by the jointly rescaled covariance.
StandardizedResult standardized_statistic(const ScoreResult& score, const PerturbationSet& draws,
                                          double rel_tol = 1e-10);

struct TestOptions {
  BasisSpec basis;
  FitConfig fit;
  PerturbConfig perturb;
  double eigen_rel_tol = 1e-10;
};

struct TestReport {
  double p_pi = 1.0, p_lambda = 1.0, p_min = 1.0, p_fisher = 1.0, p_std = 1.0;
  double q_pi = 0.0, q_lambda = 0.0, q_std = 0.0;
  double sigma2_pi = 0.0, sigma2_lambda = 0.0;
  Index n = 0, p = 0, q = 0, k = 0;
  int replicates = 0;
  std::uint64_t seed = 0;
  std::string basis;
  int refit_failures = 0;
  int null_fit_iterations = 0;
  std::vector<std::string> warnings;
};

/// Full variance-component test: null fit, basis, scores, resampling, and
/// the five p-values.
TestReport run_vc_test(const Dataset& data, const TestOptions& options);

namespace reference {
DrawPValues draw_pvalues(const PerturbationSet& draws, const MixtureSpec& mixture_pi,
                         const MixtureSpec& mixture_lambda);
}

}  // namespace zipvc
