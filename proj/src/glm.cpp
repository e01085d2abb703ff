#include "zipvc/glm.hpp"

#include "zipvc/errors.hpp"

#include <cmath>
#include <string>

namespace zipvc {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double log1pexp(double x) { return x > 35.0 ? x : std::log1p(std::exp(x)); }

// Shared Newton driver for the two canonical-link GLMs. `Family` supplies
// the mean, the variance weight and the log-likelihood contribution given
// the linear predictor.
template <class Family>
GlmFit newton_glm(const VectorXd& y, const MatrixXd& design, const VectorXd& weights, const GlmControl& control,
                  const VectorXd* start, VectorXd beta, const char* what) {
  if (start) beta = *start;
  const double total_weight = weights.sum();

  auto objective = [&](const VectorXd& b) {
    const VectorXd eta = design * b;
    double ll = 0.0;
    for (Index i = 0; i < y.size(); ++i) {
      if (weights(i) != 0.0) ll += weights(i) * Family::loglik(y(i), eta(i));
    }
    return ll;
  };

  GlmFit fit;
  double ll = objective(beta);
  for (int it = 0; it <= control.max_iterations; ++it) {
    const VectorXd eta = design * beta;
    VectorXd mu(eta.size()), var(eta.size());
    for (Index i = 0; i < eta.size(); ++i) {
      mu(i) = Family::mean(eta(i));
      var(i) = Family::variance(mu(i));
    }
    const VectorXd score = design.transpose() * (weights.array() * (y - mu).array()).matrix();
    MatrixXd info = design.transpose() * (design.array().colwise() * (weights.array() * var.array())).matrix();
    if (score.cwiseAbs().maxCoeff() / total_weight < control.tolerance) {
      fit.beta = beta;
      fit.mu = mu;
      fit.info = std::move(info);
      fit.loglik = ll;
      fit.iterations = it;
      return fit;
    }
    if (it == control.max_iterations) break;
    Eigen::LDLT<MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success) break;
    const VectorXd step = ldlt.solve(score);
    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h < 40; ++h, t *= 0.5) {
      VectorXd trial = beta + t * step;
      const double trial_ll = objective(trial);
      if (std::isfinite(trial_ll) && trial_ll >= ll - 1e-12 * (1.0 + std::abs(ll))) {
        beta = std::move(trial);
        ll = trial_ll;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  throw ConvergenceError(std::string(what) + " regression did not converge");
}

struct PoissonFamily {
  static double mean(double eta) { return std::exp(std::min(eta, 700.0)); }
  static double variance(double mu) { return mu; }
  static double loglik(double y, double eta) { return y * eta - mean(eta); }
};

struct LogisticFamily {
  static double mean(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }
  static double variance(double mu) { return mu * (1.0 - mu); }
  static double loglik(double t, double eta) { return t * eta - log1pexp(eta); }
};

}  // namespace

void require_full_rank(const MatrixXd& design, const VectorXd& weights, const char* what) {
  Index used = 0;
  for (Index i = 0; i < weights.size(); ++i) used += weights(i) > 0.0 ? 1 : 0;
  MatrixXd rows(used, design.cols());
  for (Index i = 0, r = 0; i < weights.size(); ++i) {
    if (weights(i) > 0.0) rows.row(r++) = design.row(i);
  }
  Eigen::ColPivHouseholderQR<MatrixXd> qr(rows);
  if (qr.rank() < design.cols()) {
    throw InputError(std::string("rank-deficient ") + what + " design (rank " + std::to_string(qr.rank()) + " < " +
                     std::to_string(design.cols()) + " columns)");
  }
}

GlmFit fit_poisson(const VectorXd& y, const MatrixXd& design, const VectorXd& weights, const GlmControl& control,
                   const VectorXd* start) {
  VectorXd beta = VectorXd::Zero(design.cols());
  const double mean_y = weights.dot(y) / weights.sum();
  // Intercept-first designs start at the marginal mean.
  if (design.cols() > 0 && (design.col(0).array() == 1.0).all()) beta(0) = std::log(std::max(mean_y, 1e-3));
  return newton_glm<PoissonFamily>(y, design, weights, control, start, beta, "Poisson");
}

GlmFit fit_logistic(const VectorXd& t, const MatrixXd& design, const VectorXd& weights, const GlmControl& control,
                    const VectorXd* start) {
  VectorXd beta = VectorXd::Zero(design.cols());
  return newton_glm<LogisticFamily>(t, design, weights, control, start, beta, "logistic");
}

}  // namespace zipvc
