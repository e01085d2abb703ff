#include "zipvc/omnibus.hpp"

#include "zipvc/errors.hpp"

#include <cmath>

namespace zipvc {

namespace {

double block_pvalue(double q, const MixtureSpec& mixture, bool& clamped) {
  if (q <= 0.0) return 1.0;
  if (mixture.eigenvalues.empty()) throw NumericalError("degenerate covariance block: no positive eigenvalue");
  const TailProbability t = imhof_tail(q, mixture);
  clamped = clamped || t.clamped;
  return t.p;
}

double draw_block_pvalue(double q, const MixtureSpec& mixture) {
  if (q <= 0.0 || mixture.eigenvalues.empty()) return 1.0;
  return imhof_tail(q, mixture).p;
}

}  // namespace

MarginalPValues marginal_pvalues(const ScoreResult& score, const PerturbationSet& draws, double rel_tol) {
  if (draws.k() != score.s_pi.size()) throw InputError("marginal_pvalues: score and resampling dimensions differ");
  MarginalPValues out;
  out.mixture_pi = psd_eigenvalues(draws.sigma_pi(), rel_tol);
  out.mixture_lambda = psd_eigenvalues(draws.sigma_lambda(), rel_tol);
  out.p_pi = block_pvalue(score.q_pi, out.mixture_pi, out.clamped);
  out.p_lambda = block_pvalue(score.q_lambda, out.mixture_lambda, out.clamped);
  return out;
}

DrawPValues draw_pvalues(const PerturbationSet& draws, const MixtureSpec& mixture_pi,
                         const MixtureSpec& mixture_lambda) {
  const Index b_count = draws.q_draws.rows();
  DrawPValues out{VectorXd(b_count), VectorXd(b_count)};
#pragma omp parallel for schedule(dynamic, 8)
  for (Index b = 0; b < b_count; ++b) {
    out.p_pi(b) = draw_block_pvalue(draws.q_draws(b, 0), mixture_pi);
    out.p_lambda(b) = draw_block_pvalue(draws.q_draws(b, 1), mixture_lambda);
  }
  return out;
}

namespace reference {

DrawPValues draw_pvalues(const PerturbationSet& draws, const MixtureSpec& mixture_pi,
                         const MixtureSpec& mixture_lambda) {
  const Index b_count = draws.q_draws.rows();
  DrawPValues out{VectorXd(b_count), VectorXd(b_count)};
  for (Index b = 0; b < b_count; ++b) {
    out.p_pi(b) = draw_block_pvalue(draws.q_draws(b, 0), mixture_pi);
    out.p_lambda(b) = draw_block_pvalue(draws.q_draws(b, 1), mixture_lambda);
  }
  return out;
}

}  // namespace reference

double empirical_pvalue(double observed, const VectorXd& draws) {
  Index count = 0;
  for (Index b = 0; b < draws.size(); ++b) count += draws(b) <= observed ? 1 : 0;
  return static_cast<double>(count + 1) / static_cast<double>(draws.size() + 1);
}

double minp_statistic(double p_pi, double p_lambda) { return std::min(p_pi, p_lambda); }

double fisher_statistic(double p_pi, double p_lambda) { return std::log(p_pi) + std::log(p_lambda); }

double minp_pvalue(double p_pi, double p_lambda, const DrawPValues& draws) {
  VectorXd stats(draws.p_pi.size());
  for (Index b = 0; b < stats.size(); ++b) stats(b) = minp_statistic(draws.p_pi(b), draws.p_lambda(b));
  return empirical_pvalue(minp_statistic(p_pi, p_lambda), stats);
}

double fisher_pvalue(double p_pi, double p_lambda, const DrawPValues& draws) {
  VectorXd stats(draws.p_pi.size());
  for (Index b = 0; b < stats.size(); ++b) stats(b) = fisher_statistic(draws.p_pi(b), draws.p_lambda(b));
  return empirical_pvalue(fisher_statistic(p_pi, p_lambda), stats);
}

StandardizedResult standardized_statistic(const ScoreResult& score, const PerturbationSet& draws, double rel_tol) {
  const Index k = draws.k();
  if (k != score.s_pi.size()) throw InputError("standardized_statistic: score and resampling dimensions differ");
  StandardizedResult out;
  out.sigma2_pi = draws.sigma_pi().trace();
  out.sigma2_lambda = draws.sigma_lambda().trace();
  if (!(out.sigma2_pi > 0.0) || !(out.sigma2_lambda > 0.0)) {
    throw NumericalError("standardized_statistic: zero trace in a covariance block");
  }
  out.q_std = score.q_pi / out.sigma2_pi + score.q_lambda / out.sigma2_lambda;
  VectorXd scale(2 * k);
  scale.head(k).setConstant(1.0 / std::sqrt(out.sigma2_pi));
  scale.tail(k).setConstant(1.0 / std::sqrt(out.sigma2_lambda));
  const MatrixXd rescaled = scale.asDiagonal() * draws.sigma_hat * scale.asDiagonal();
  out.mixture = psd_eigenvalues(rescaled, rel_tol);
  out.p_std = block_pvalue(out.q_std, out.mixture, out.clamped);
  return out;
}

TestReport run_vc_test(const Dataset& data, const TestOptions& options) {
  validate_dataset(data);
  const NullFit null_fit = fit_null(data, VectorXd::Ones(data.n()), options.fit);
  const Basis basis = build_basis(data.genotypes, options.basis);
  const ScoreResult score = score_statistics(null_fit, data, basis);
  PerturbConfig perturb_config = options.perturb;
  perturb_config.fit.tolerance = options.fit.tolerance;
  perturb_config.fit.max_iterations = options.fit.max_iterations;
  perturb_config.fit.boundary_eps = options.fit.boundary_eps;
  const PerturbationSet draws = perturb(data, basis, null_fit, perturb_config);

  const MarginalPValues marginal = marginal_pvalues(score, draws, options.eigen_rel_tol);
  const DrawPValues per_draw = draw_pvalues(draws, marginal.mixture_pi, marginal.mixture_lambda);
  const StandardizedResult standardized = standardized_statistic(score, draws, options.eigen_rel_tol);

  TestReport report;
  report.p_pi = marginal.p_pi;
  report.p_lambda = marginal.p_lambda;
  report.p_min = minp_pvalue(marginal.p_pi, marginal.p_lambda, per_draw);
  report.p_fisher = fisher_pvalue(marginal.p_pi, marginal.p_lambda, per_draw);
  report.p_std = standardized.p_std;
  report.q_pi = score.q_pi;
  report.q_lambda = score.q_lambda;
  report.q_std = standardized.q_std;
  report.sigma2_pi = standardized.sigma2_pi;
  report.sigma2_lambda = standardized.sigma2_lambda;
  report.n = data.n();
  report.p = data.p();
  report.q = data.q();
  report.k = basis.psi.cols();
  report.replicates = draws.replicates;
  report.seed = draws.seed;
  report.basis = options.basis.describe();
  report.refit_failures = draws.refit_failures;
  report.null_fit_iterations = null_fit.iterations;
  if (marginal.clamped || standardized.clamped) {
    report.warnings.push_back("an Imhof p-value fell below 1e-12 and was clamped");
  }
  if (draws.refit_failures > 0) {
    report.warnings.push_back(std::to_string(draws.refit_failures) + " weighted refits failed and were redrawn");
  }
  return report;
}

}  // namespace zipvc
