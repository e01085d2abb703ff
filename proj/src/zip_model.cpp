#include "zipvc/zip_model.hpp"

#include "zipvc/errors.hpp"
#include "zipvc/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace zipvc {

namespace {

constexpr double kMaxLogLambda = 700.0;
// EM hands over to Newton once the scaled score is this small.
constexpr double kEmHandover = 1e-4;
// Consecutive iterations on the pi clamp before a fit is declared a boundary fit.
constexpr int kBoundaryPatience = 10;

double expit(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

double clamp_pi(double eta, double eps) { return std::clamp(expit(eta), eps, 1.0 - eps); }

double log_factorial(double y) { return std::lgamma(y + 1.0); }

// Per-observation log-likelihood and derivatives with respect to the two
// linear predictors.
struct ObsTerms {
  double ll, d_pi, d_lambda, h_pipi, h_pilambda, h_lambdalambda;
};

ObsTerms observation_terms(double y, double eta_pi, double eta_lambda, double eps) {
  const double pi = clamp_pi(eta_pi, eps);
  const double log_lambda = std::min(eta_lambda, kMaxLogLambda);
  const double lambda = std::exp(log_lambda);
  ObsTerms t{};
  if (y > 0.0) {
    t.ll = std::log(pi) + y * log_lambda - lambda - log_factorial(y);
    t.d_pi = 1.0 - pi;
    t.d_lambda = y - lambda;
    t.h_pipi = -pi * (1.0 - pi);
    t.h_pilambda = 0.0;
    t.h_lambdalambda = -lambda;
    return t;
  }
  const double e = std::exp(-lambda);
  const double p_zero = (1.0 - pi) + pi * e;
  const double g_pi = pi * (1.0 - pi) * -std::expm1(-lambda);
  const double g_lambda = pi * lambda * e;
  const double a = g_pi / p_zero;
  const double b = g_lambda / p_zero;
  t.ll = std::log(p_zero);
  t.d_pi = -a;
  t.d_lambda = -b;
  t.h_pipi = -(1.0 - 2.0 * pi) * a - a * a;
  t.h_lambdalambda = -(1.0 - lambda) * b - b * b;
  t.h_pilambda = -(1.0 - pi) * b - a * b;
  return t;
}

double weighted_loglik(const VectorXd& y, const VectorXd& eta_pi, const VectorXd& eta_lambda,
                       const VectorXd& weights, double eps) {
  double ll = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    if (weights(i) == 0.0) continue;
    const double pi = clamp_pi(eta_pi(i), eps);
    const double log_lambda = std::min(eta_lambda(i), kMaxLogLambda);
    const double lambda = std::exp(log_lambda);
    if (y(i) > 0.0) {
      ll += weights(i) * (std::log(pi) + y(i) * log_lambda - lambda - log_factorial(y(i)));
    } else {
      ll += weights(i) * std::log((1.0 - pi) + pi * std::exp(-lambda));
    }
  }
  return ll;
}

struct Problem {
  const VectorXd& y;
  const MatrixXd& design_pi;
  const MatrixXd& design_lambda;
  const VectorXd& weights;
  double eps;

  Index k_pi() const { return design_pi.cols(); }
  Index k_lambda() const { return design_lambda.cols(); }

  double loglik(const VectorXd& beta) const {
    return weighted_loglik(y, design_pi * beta.head(k_pi()), design_lambda * beta.tail(k_lambda()), weights, eps);
  }
};

VectorXd initial_values(const Problem& prob) {
  const VectorXd& y = prob.y;
  const VectorXd& w = prob.weights;
  Index positives = 0;
  for (Index i = 0; i < y.size(); ++i) positives += (y(i) > 0.0 && w(i) > 0.0) ? 1 : 0;
  if (positives == 0) {
    throw BoundaryError("boundary: all outcomes are zero, the likelihood increases as pi -> 0 and has no interior maximum");
  }
  // Poisson fit on the positive counts.
  VectorXd w_pos = w;
  for (Index i = 0; i < y.size(); ++i) {
    if (y(i) == 0.0) w_pos(i) = 0.0;
  }
  VectorXd beta_lambda;
  try {
    GlmControl control;
    control.tolerance = 1e-8;
    beta_lambda = fit_poisson(y, prob.design_lambda, w_pos, control).beta;
  } catch (const NumericalError&) {
    beta_lambda = VectorXd::Zero(prob.k_lambda());
    beta_lambda(0) = std::log(std::max(w_pos.dot(y) / w_pos.sum(), 1e-3));
  }
  const VectorXd lambda = (prob.design_lambda * beta_lambda).array().min(kMaxLogLambda).exp();
  const double total = w.sum();
  double observed_zero = 0.0, predicted_zero = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    observed_zero += w(i) * (y(i) == 0.0 ? 1.0 : 0.0);
    predicted_zero += w(i) * std::exp(-lambda(i));
  }
  observed_zero /= total;
  predicted_zero /= total;
  // Susceptible fraction: one minus the zero mass the Poisson part cannot explain.
  const double structural = (observed_zero - predicted_zero) / std::max(1.0 - predicted_zero, 1e-12);
  const double susceptible = std::clamp(1.0 - structural, 1e-12, 1.0 - 1e-12);
  VectorXd beta(prob.k_pi() + prob.k_lambda());
  beta.setZero();
  beta(0) = std::clamp(std::log(susceptible / (1.0 - susceptible)), -4.0, 4.0);
  beta.tail(prob.k_lambda()) = beta_lambda;
  return beta;
}

ZipDerivatives derivatives(const Problem& prob, const VectorXd& beta, bool with_info) {
  const VectorXd eta_pi = prob.design_pi * beta.head(prob.k_pi());
  const VectorXd eta_lambda = prob.design_lambda * beta.tail(prob.k_lambda());
  const Index n = prob.y.size();
  VectorXd d_pi(n), d_lambda(n), h_pp(n), h_pl(n), h_ll(n);
  double ll = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double w = prob.weights(i);
    if (w == 0.0) {
      d_pi(i) = d_lambda(i) = h_pp(i) = h_pl(i) = h_ll(i) = 0.0;
      continue;
    }
    const ObsTerms t = observation_terms(prob.y(i), eta_pi(i), eta_lambda(i), prob.eps);
    ll += w * t.ll;
    d_pi(i) = w * t.d_pi;
    d_lambda(i) = w * t.d_lambda;
    h_pp(i) = w * t.h_pipi;
    h_pl(i) = w * t.h_pilambda;
    h_ll(i) = w * t.h_lambdalambda;
  }
  ZipDerivatives out;
  out.loglik = ll;
  const Index a = prob.k_pi(), c = prob.k_lambda();
  out.score.resize(a + c);
  out.score.head(a) = prob.design_pi.transpose() * d_pi;
  out.score.tail(c) = prob.design_lambda.transpose() * d_lambda;
  if (with_info) {
    out.info.resize(a + c, a + c);
    out.info.topLeftCorner(a, a) =
        -prob.design_pi.transpose() * (prob.design_pi.array().colwise() * h_pp.array()).matrix();
    out.info.bottomRightCorner(c, c) =
        -prob.design_lambda.transpose() * (prob.design_lambda.array().colwise() * h_ll.array()).matrix();
    out.info.topRightCorner(a, c) =
        -prob.design_pi.transpose() * (prob.design_lambda.array().colwise() * h_pl.array()).matrix();
    out.info.bottomLeftCorner(c, a) = out.info.topRightCorner(a, c).transpose();
  }
  return out;
}

double pi_logit_limit(double eps) { return std::log((1.0 - eps) / eps); }

bool on_pi_clamp(const Problem& prob, const VectorXd& beta) {
  const double limit = pi_logit_limit(prob.eps);
  const VectorXd eta = prob.design_pi * beta.head(prob.k_pi());
  for (Index i = 0; i < eta.size(); ++i) {
    if (prob.weights(i) > 0.0 && std::abs(eta(i)) >= limit) return true;
  }
  return false;
}

// One EM iteration: E-step posterior susceptibility, then weighted logistic
// and weighted Poisson M-steps warm-started at the current values.
VectorXd em_step(const Problem& prob, const VectorXd& beta) {
  const Index n = prob.y.size();
  const Index a = prob.k_pi(), c = prob.k_lambda();
  const VectorXd eta_pi = prob.design_pi * beta.head(a);
  const VectorXd eta_lambda = prob.design_lambda * beta.tail(c);
  VectorXd posterior(n), lambda_weights(n);
  for (Index i = 0; i < n; ++i) {
    if (prob.y(i) > 0.0) {
      posterior(i) = 1.0;
    } else {
      const double pi = clamp_pi(eta_pi(i), prob.eps);
      const double e = std::exp(-std::exp(std::min(eta_lambda(i), kMaxLogLambda)));
      posterior(i) = pi * e / ((1.0 - pi) + pi * e);
    }
    lambda_weights(i) = prob.weights(i) * posterior(i);
  }
  VectorXd next = beta;
  GlmControl control;
  control.max_iterations = 25;
  control.tolerance = 1e-12;
  const VectorXd start_pi = beta.head(a);
  const VectorXd start_lambda = beta.tail(c);
  try {
    next.head(a) = fit_logistic(posterior, prob.design_pi, prob.weights, control, &start_pi).beta;
  } catch (const ConvergenceError&) {
  }
  try {
    next.tail(c) = fit_poisson(prob.y, prob.design_lambda, lambda_weights, control, &start_lambda).beta;
  } catch (const ConvergenceError&) {
  }
  return next;
}

// Damped Newton step with backtracking; returns false when no ascent step exists.
bool newton_step(const Problem& prob, VectorXd& beta, double& ll, const ZipDerivatives& d) {
  const Index dim = beta.size();
  const double scale = std::max(d.info.diagonal().cwiseAbs().maxCoeff(), 1e-12);
  double damping = 0.0;
  for (int attempt = 0; attempt < 12; ++attempt) {
    MatrixXd h = d.info;
    if (damping > 0.0) h.diagonal().array() += damping;
    Eigen::LLT<MatrixXd> llt(h);
    if (llt.info() == Eigen::Success) {
      const VectorXd step = llt.solve(d.score);
      double t = 1.0;
      for (int halving = 0; halving < 30; ++halving, t *= 0.5) {
        VectorXd trial = beta + t * step;
        const double trial_ll = prob.loglik(trial);
        if (std::isfinite(trial_ll) && trial_ll >= ll - 1e-12 * (1.0 + std::abs(ll))) {
          beta = std::move(trial);
          ll = trial_ll;
          return true;
        }
      }
    }
    damping = damping == 0.0 ? 1e-8 * scale : damping * 10.0;
  }
  (void)dim;
  return false;
}

}  // namespace

double zip_loglik(double y, double pi, double lambda) {
  if (!(lambda > 0.0)) throw InputError("zip_loglik: lambda must be positive");
  if (y > 0.0) {
    if (pi <= 0.0) return -std::numeric_limits<double>::infinity();
    return std::log(pi) + y * std::log(lambda) - lambda - log_factorial(y);
  }
  // log((1 - pi) + pi e^{-lambda}) as a log-sum-exp of the two components.
  const double log_structural = std::log1p(-pi);
  const double log_poisson = std::log(pi) - lambda;
  const double m = std::max(log_structural, log_poisson);
  if (m == -std::numeric_limits<double>::infinity()) return m;
  return m + std::log(std::exp(log_structural - m) + std::exp(log_poisson - m));
}

ZipDerivatives zip_derivatives(const VectorXd& y, const MatrixXd& design_pi, const MatrixXd& design_lambda,
                               const VectorXd& weights, const VectorXd& beta_pi, const VectorXd& beta_lambda,
                               double boundary_eps, bool with_info) {
  Problem prob{y, design_pi, design_lambda, weights, boundary_eps};
  VectorXd beta(beta_pi.size() + beta_lambda.size());
  beta << beta_pi, beta_lambda;
  return derivatives(prob, beta, with_info);
}

ZipFit fit_zip(const VectorXd& y, const MatrixXd& design_pi, const MatrixXd& design_lambda, const VectorXd& weights,
               const FitConfig& config, const std::optional<VectorXd>& start) {
  const Index n = y.size();
  if (design_pi.rows() != n || design_lambda.rows() != n || weights.size() != n) {
    throw InputError("fit_zip: dimension mismatch between outcome, designs and weights");
  }
  if (!(config.tolerance > 0.0) || !(config.boundary_eps > 0.0)) {
    throw InputError("fit_zip: tolerance and boundary guard must be positive");
  }
  if ((weights.array() < 0.0).any() || !(weights.sum() > 0.0)) {
    throw InputError("fit_zip: weights must be non-negative and not all zero");
  }
  require_full_rank(design_pi, weights, "zero-inflation");
  require_full_rank(design_lambda, weights, "Poisson-rate");

  const Problem prob{y, design_pi, design_lambda, weights, config.boundary_eps};
  const double total_weight = weights.sum();
  VectorXd beta = start ? *start : initial_values(prob);
  if (beta.size() != prob.k_pi() + prob.k_lambda()) throw InputError("fit_zip: start vector has the wrong length");

  ZipFit fit;
  double ll = prob.loglik(beta);
  int iterations = 0;
  int clamp_streak = 0;
  bool converged = false;
  double score_norm = std::numeric_limits<double>::infinity();

  auto track_boundary = [&]() {
    clamp_streak = on_pi_clamp(prob, beta) ? clamp_streak + 1 : 0;
    if (clamp_streak >= kBoundaryPatience) {
      throw BoundaryError("boundary: fitted pi drifted onto the clamp and stayed there; no interior maximum");
    }
  };

  if (config.optimizer == Optimizer::em) {
    while (iterations < config.max_iterations) {
      const ZipDerivatives d = derivatives(prob, beta, false);
      score_norm = d.score.cwiseAbs().maxCoeff() / total_weight;
      if (score_norm < config.tolerance) {
        converged = true;
        break;
      }
      if (score_norm < kEmHandover) break;
      beta = em_step(prob, beta);
      ll = prob.loglik(beta);
      fit.loglik_trace.push_back(ll);
      ++iterations;
      track_boundary();
    }
  }
  while (!converged && iterations < config.max_iterations) {
    const ZipDerivatives d = derivatives(prob, beta, true);
    score_norm = d.score.cwiseAbs().maxCoeff() / total_weight;
    if (score_norm < config.tolerance) {
      converged = true;
      break;
    }
    if (!newton_step(prob, beta, ll, d)) break;
    fit.loglik_trace.push_back(ll);
    ++iterations;
    track_boundary();
  }
  if (!converged) {
    const ZipDerivatives d = derivatives(prob, beta, false);
    score_norm = d.score.cwiseAbs().maxCoeff() / total_weight;
    converged = score_norm < config.tolerance;
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "ZIP fit did not converge after " << iterations << " iterations (scaled score max-norm " << score_norm
        << ")";
    throw ConvergenceError(msg.str());
  }
  if (on_pi_clamp(prob, beta)) {
    throw BoundaryError("boundary: the ZIP fit rests on the pi clamp; no interior maximum");
  }

  const ZipDerivatives d = derivatives(prob, beta, true);
  fit.beta_pi = beta.head(prob.k_pi());
  fit.beta_lambda = beta.tail(prob.k_lambda());
  const VectorXd eta_pi = design_pi * fit.beta_pi;
  fit.pi0 = eta_pi.unaryExpr([&](double e) { return clamp_pi(e, config.boundary_eps); });
  fit.lambda0 = (design_lambda * fit.beta_lambda).array().min(kMaxLogLambda).exp();
  fit.loglik = d.loglik;
  fit.info = d.info;
  fit.converged = true;
  fit.iterations = iterations;
  fit.score_norm = d.score.cwiseAbs().maxCoeff() / total_weight;
  fit.weights_used = weights;
  return fit;
}

MatrixXd null_design(const Dataset& data) {
  MatrixXd design(data.n(), data.q() + 1);
  design.col(0).setOnes();
  if (data.q() > 0) design.rightCols(data.q()) = data.covariates;
  return design;
}

NullFit fit_null(const Dataset& data, const VectorXd& weights, const FitConfig& config,
                 const std::optional<VectorXd>& start) {
  const MatrixXd design = null_design(data);
  return fit_zip(data.y, design, design, weights, config, start);
}

NullFit fit_null(const Dataset& data, const FitConfig& config) {
  return fit_null(data, VectorXd::Ones(data.n()), config);
}

}  // namespace zipvc
