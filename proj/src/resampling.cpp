#include "zipvc/resampling.hpp"

#include "zipvc/errors.hpp"
#include "zipvc/rng.hpp"

#include <cmath>
#include <sstream>

namespace zipvc {

namespace {

constexpr int kMinReplicates = 100;

struct Context {
  const Dataset& data;
  const Basis& basis;
  MatrixXd design;
  VectorXd s_observed;  // (S_pi, S_lambda)
  VectorXd start;       // null estimate, warm start for every refit
  FitConfig fit;
};

Context make_context(const Dataset& data, const Basis& basis, const NullFit& null_fit, const PerturbConfig& config) {
  if (config.replicates < kMinReplicates) {
    throw InputError("perturb: at least " + std::to_string(kMinReplicates) + " resamples are required");
  }
  if (!null_fit.converged) throw InputError("perturb: the null fit did not converge");
  const ScoreResult observed = score_statistics(null_fit, data, basis);
  Context ctx{data, basis, null_design(data), VectorXd(2 * basis.psi.cols()), VectorXd(), config.fit};
  ctx.s_observed << observed.s_pi, observed.s_lambda;
  ctx.start.resize(null_fit.beta_pi.size() + null_fit.beta_lambda.size());
  ctx.start << null_fit.beta_pi, null_fit.beta_lambda;
  // Refits start at the null estimate, where Newton converges in a few steps.
  ctx.fit.optimizer = Optimizer::newton;
  return ctx;
}

struct ReplicateOutcome {
  VectorXd centered;
  int failed_attempts = 0;
  bool ok = false;
  std::string last_error;
};

ReplicateOutcome run_replicate(const Context& ctx, const PerturbConfig& config, int b) {
  ReplicateOutcome out;
  const Index n = ctx.data.n();
  const Index k = ctx.basis.psi.cols();
  for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
    const VectorXd weights = config.scheme == WeightScheme::unit
                                 ? VectorXd::Ones(n)
                                 : draw_weights(n, config.seed, static_cast<std::uint64_t>(b),
                                                static_cast<std::uint64_t>(attempt));
    try {
      const ZipFit refit = fit_zip(ctx.data.y, ctx.design, ctx.design, weights, ctx.fit, ctx.start);
      const VectorXd r_pi = residuals_pi(ctx.data.y, refit.pi0, refit.lambda0);
      const VectorXd r_lambda = residuals_lambda(ctx.data.y, refit.pi0, refit.lambda0);
      VectorXd s(2 * k);
      s << weighted_score(ctx.basis.psi, r_pi, weights), weighted_score(ctx.basis.psi, r_lambda, weights);
      out.centered = std::sqrt(static_cast<double>(n)) * (s - ctx.s_observed);
      out.ok = true;
      return out;
    } catch (const NumericalError& e) {
      ++out.failed_attempts;
      out.last_error = e.what();
    }
  }
  return out;
}

PerturbationSet assemble(const Context& ctx, const PerturbConfig& config, std::vector<ReplicateOutcome>& outcomes) {
  const Index k = ctx.basis.psi.cols();
  PerturbationSet set;
  set.seed = config.seed;
  set.replicates = config.replicates;
  set.b_draws.resize(config.replicates, 2 * k);
  set.q_draws.resize(config.replicates, 2);
  for (int b = 0; b < config.replicates; ++b) {
    const ReplicateOutcome& o = outcomes[static_cast<std::size_t>(b)];
    set.refit_failures += o.failed_attempts;
    if (!o.ok) {
      throw ConvergenceError("perturb: replicate " + std::to_string(b) + " failed " +
                             std::to_string(config.max_attempts) + " weighted refits; last error: " + o.last_error);
    }
    set.b_draws.row(b) = o.centered.transpose();
    set.q_draws(b, 0) = o.centered.head(k).squaredNorm();
    set.q_draws(b, 1) = o.centered.tail(k).squaredNorm();
  }
  if (set.refit_failures > config.max_failure_fraction * config.replicates) {
    std::ostringstream msg;
    msg << "perturb: " << set.refit_failures << " weighted refits failed (more than "
        << 100.0 * config.max_failure_fraction << "% of " << config.replicates << " resamples)";
    throw ConvergenceError(msg.str());
  }
  set.sigma_hat = sample_covariance(set.b_draws);
  return set;
}

}  // namespace

VectorXd draw_weights(Index n, std::uint64_t seed, std::uint64_t replicate, std::uint64_t attempt) {
  Stream stream(seed, {static_cast<std::uint64_t>(StreamPurpose::weights), replicate, attempt});
  VectorXd w(n);
  for (Index i = 0; i < n; ++i) w(i) = stream.exponential();
  return w;
}

MatrixXd sample_covariance(const MatrixXd& draws) {
  const MatrixXd centered = draws.rowwise() - draws.colwise().mean();
  const MatrixXd cov = centered.transpose() * centered / static_cast<double>(draws.rows() - 1);
  // The product is symmetric only up to rounding.
  return 0.5 * (cov + cov.transpose());
}

PerturbationSet perturb(const Dataset& data, const Basis& basis, const NullFit& null_fit,
                        const PerturbConfig& config) {
  const Context ctx = make_context(data, basis, null_fit, config);
  std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(config.replicates));
#pragma omp parallel for schedule(dynamic, 4)
  for (int b = 0; b < config.replicates; ++b) outcomes[static_cast<std::size_t>(b)] = run_replicate(ctx, config, b);
  return assemble(ctx, config, outcomes);
}

namespace reference {

PerturbationSet perturb(const Dataset& data, const Basis& basis, const NullFit& null_fit,
                        const PerturbConfig& config) {
  const Context ctx = make_context(data, basis, null_fit, config);
  std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(config.replicates));
  for (int b = 0; b < config.replicates; ++b) outcomes[static_cast<std::size_t>(b)] = run_replicate(ctx, config, b);
  return assemble(ctx, config, outcomes);
}

}  // namespace reference

}  // namespace zipvc
