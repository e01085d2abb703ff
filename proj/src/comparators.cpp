#include "zipvc/comparators.hpp"

#include "zipvc/errors.hpp"
#include "zipvc/glm.hpp"

#include <boost/math/distributions/chi_squared.hpp>

namespace zipvc {

namespace {

MatrixXd alternative_design(const Dataset& data, const std::vector<Index>& kept) {
  const Index base = data.q() + 1;
  MatrixXd design(data.n(), base + static_cast<Index>(kept.size()));
  design.leftCols(base) = null_design(data);
  design.rightCols(static_cast<Index>(kept.size())) = select_columns(data.genotypes, kept);
  return design;
}

double wald_statistic(const VectorXd& estimate, const MatrixXd& covariance) {
  Eigen::LDLT<MatrixXd> ldlt(covariance);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw NumericalError("Wald covariance is not positive definite");
  }
  return std::max(0.0, estimate.dot(ldlt.solve(estimate)));
}

MatrixXd invert_information(const MatrixXd& info) {
  Eigen::LDLT<MatrixXd> ldlt(info);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw NumericalError("observed information is not positive definite");
  }
  return ldlt.solve(MatrixXd::Identity(info.rows(), info.cols()));
}

}  // namespace

std::string_view to_string(WaldTarget target) {
  switch (target) {
    case WaldTarget::pi: return "wald_zip_pi";
    case WaldTarget::lambda: return "wald_zip_lambda";
    case WaldTarget::joint: return "wald_zip_joint";
    case WaldTarget::poisson_hw: return "wald_poisson_hw";
  }
  return "unknown";
}

double chi_square_sf(double x, double dof) {
  if (x <= 0.0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(dof), x));
}

ZipAlternativeFit fit_zip_alternative(const Dataset& data, const WaldOptions& options) {
  ZipAlternativeFit out;
  out.kept = ld_prune(data.genotypes, options.prune_threshold, data.snp_names).kept;
  out.covariate_columns = data.q() + 1;
  const MatrixXd design = alternative_design(data, out.kept);
  const Index width = design.cols();

  // Start from the null estimate with zero genotype effects.
  const NullFit null_fit = fit_null(data, VectorXd::Ones(data.n()), options.fit);
  VectorXd start = VectorXd::Zero(2 * width);
  start.head(out.covariate_columns) = null_fit.beta_pi;
  start.segment(width, out.covariate_columns) = null_fit.beta_lambda;
  out.fit = fit_zip(data.y, design, design, VectorXd::Ones(data.n()), options.fit, start);
  return out;
}

std::array<WaldResult, 3> wald_zip_all(const Dataset& data, const WaldOptions& options) {
  const ZipAlternativeFit alt = fit_zip_alternative(data, options);
  const Index g = static_cast<Index>(alt.kept.size());
  const Index width = alt.covariate_columns + g;
  const MatrixXd covariance = invert_information(alt.fit.info);

  std::vector<Index> pi_idx, lambda_idx;
  for (Index j = 0; j < g; ++j) {
    pi_idx.push_back(alt.covariate_columns + j);
    lambda_idx.push_back(width + alt.covariate_columns + j);
  }
  std::vector<Index> joint_idx = pi_idx;
  joint_idx.insert(joint_idx.end(), lambda_idx.begin(), lambda_idx.end());

  VectorXd beta(2 * width);
  beta << alt.fit.beta_pi, alt.fit.beta_lambda;

  auto test = [&](const std::vector<Index>& idx, WaldTarget which) {
    const auto m = static_cast<Index>(idx.size());
    VectorXd est(m);
    MatrixXd cov(m, m);
    for (Index a = 0; a < m; ++a) {
      est(a) = beta(idx[a]);
      for (Index b = 0; b < m; ++b) cov(a, b) = covariance(idx[a], idx[b]);
    }
    if (which == WaldTarget::joint && options.block_diagonal) {
      cov.topRightCorner(g, g).setZero();
      cov.bottomLeftCorner(g, g).setZero();
    }
    WaldResult r;
    r.which = which;
    r.statistic = wald_statistic(est, cov);
    r.degrees_of_freedom = static_cast<int>(m);
    r.p_value = chi_square_sf(r.statistic, static_cast<double>(m));
    r.tested_columns = g;
    r.iterations = alt.fit.iterations;
    return r;
  };
  return {test(pi_idx, WaldTarget::pi), test(lambda_idx, WaldTarget::lambda), test(joint_idx, WaldTarget::joint)};
}

WaldResult wald_zip(const Dataset& data, WaldTarget which, const WaldOptions& options) {
  const auto all = wald_zip_all(data, options);
  switch (which) {
    case WaldTarget::pi: return all[0];
    case WaldTarget::lambda: return all[1];
    case WaldTarget::joint: return all[2];
    case WaldTarget::poisson_hw: break;
  }
  throw InputError("wald_zip: use wald_poisson_hw for the Poisson comparator");
}

PoissonSandwichFit fit_poisson_sandwich(const Dataset& data, double prune_threshold) {
  PoissonSandwichFit out;
  out.kept = ld_prune(data.genotypes, prune_threshold, data.snp_names).kept;
  out.covariate_columns = data.q() + 1;
  const MatrixXd design = alternative_design(data, out.kept);
  const VectorXd ones = VectorXd::Ones(data.n());
  require_full_rank(design, ones, "Poisson");
  const GlmFit fit = fit_poisson(data.y, design, ones);
  out.beta = fit.beta;
  out.model_covariance = invert_information(fit.info);
  const VectorXd resid2 = (data.y - fit.mu).array().square();
  const MatrixXd meat = design.transpose() * (design.array().colwise() * resid2.array()).matrix();
  out.sandwich_covariance = out.model_covariance * meat * out.model_covariance;
  return out;
}

WaldResult wald_poisson_hw(const Dataset& data, const WaldOptions& options) {
  const PoissonSandwichFit fit = fit_poisson_sandwich(data, options.prune_threshold);
  const auto g = static_cast<Index>(fit.kept.size());
  const VectorXd est = fit.beta.tail(g);
  const MatrixXd cov = fit.sandwich_covariance.bottomRightCorner(g, g);
  WaldResult r;
  r.which = WaldTarget::poisson_hw;
  r.statistic = wald_statistic(est, cov);
  r.degrees_of_freedom = static_cast<int>(g);
  r.p_value = chi_square_sf(r.statistic, static_cast<double>(g));
  r.tested_columns = g;
  return r;
}

}  // namespace zipvc
