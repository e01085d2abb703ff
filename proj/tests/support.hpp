// Shared fixtures and independent oracles for the unit tests.
#pragma once

#include "zipvc/dataset.hpp"
#include "zipvc/rng.hpp"
#include "zipvc/zip_model.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

namespace zipvc::testing {

inline std::filesystem::path data_dir() { return ZIPVC_DATA_DIR; }

// Cyclic Jacobi rotations; plain loops, no Eigen solvers.
inline std::vector<double> jacobi_eigenvalues(MatrixXd a, int sweeps = 100) {
  const Index n = a.rows();
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    double off = 0.0;
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off < 1e-30) break;
    for (Index p = 0; p < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> out(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = a(i, i);
  std::sort(out.rbegin(), out.rend());
  return out;
}

// Pearson correlation from raw sums.
inline double hand_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

// Weighted ZIP log-likelihood built only from zip_loglik.
inline double weighted_loglik(const VectorXd& y, const MatrixXd& z_pi, const MatrixXd& z_lambda, const VectorXd& w,
                              const VectorXd& beta) {
  const Index a = z_pi.cols();
  const VectorXd eta_pi = z_pi * beta.head(a);
  const VectorXd eta_lambda = z_lambda * beta.tail(beta.size() - a);
  double ll = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    const double pi = 1.0 / (1.0 + std::exp(-eta_pi(i)));
    ll += w(i) * zip_loglik(y(i), pi, std::exp(eta_lambda(i)));
  }
  return ll;
}

inline VectorXd fd_gradient(const VectorXd& y, const MatrixXd& z_pi, const MatrixXd& z_lambda, const VectorXd& w,
                            const VectorXd& beta, double h = 1e-5) {
  VectorXd g(beta.size());
  for (Index k = 0; k < beta.size(); ++k) {
    VectorXd up = beta, down = beta;
    up(k) += h;
    down(k) -= h;
    g(k) = (weighted_loglik(y, z_pi, z_lambda, w, up) - weighted_loglik(y, z_pi, z_lambda, w, down)) / (2 * h);
  }
  return g;
}

// Negative Hessian by central differences of the analytic score.
template <class ScoreFn>
MatrixXd fd_information(const ScoreFn& score, const VectorXd& beta, double h = 1e-5) {
  const Index d = beta.size();
  MatrixXd info(d, d);
  for (Index k = 0; k < d; ++k) {
    VectorXd up = beta, down = beta;
    up(k) += h;
    down(k) -= h;
    info.col(k) = -(score(up) - score(down)) / (2 * h);
  }
  return 0.5 * (info + info.transpose());
}

inline double relative_error(const VectorXd& a, const VectorXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-12);
}

inline double relative_error(const MatrixXd& a, const MatrixXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-12);
}

// One-sample Kolmogorov-Smirnov distance to Uniform(0, 1).
inline double ks_uniform(std::vector<double> p) {
  std::sort(p.begin(), p.end());
  const double n = static_cast<double>(p.size());
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - p[i]));
    d = std::max(d, std::abs(p[i] - static_cast<double>(i) / n));
  }
  return d;
}

struct ZipTruth {
  double alpha_pi = 1.0;
  double alpha_lambda = 1.0;
  double beta_pi = 0.5;  // per covariate
  double beta_lambda = 0.3;
  double maf = 0.3;
};

// Null ZIP data with q standard-normal covariates and p independent SNPs,
// generated in test code independently of the simulator module.
inline Dataset make_zip_data(Index n, Index q, Index p, std::uint64_t seed, const ZipTruth& truth = {}) {
  Stream s(seed, {static_cast<std::uint64_t>(StreamPurpose::test_data)});
  Dataset d;
  d.covariates.resize(n, q);
  d.genotypes.resize(n, p);
  d.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    double eta_pi = truth.alpha_pi, eta_lambda = truth.alpha_lambda;
    for (Index j = 0; j < q; ++j) {
      d.covariates(i, j) = s.normal();
      eta_pi += truth.beta_pi * d.covariates(i, j);
      eta_lambda += truth.beta_lambda * d.covariates(i, j);
    }
    for (Index j = 0; j < p; ++j) d.genotypes(i, j) = s.binomial(2, truth.maf);
    const double pi = 1.0 / (1.0 + std::exp(-eta_pi));
    const bool susceptible = s.bernoulli(pi);
    d.y(i) = susceptible ? static_cast<double>(s.poisson(std::exp(eta_lambda))) : 0.0;
    d.ids.push_back("i" + std::to_string(i));
  }
  for (Index j = 0; j < q; ++j) d.covariate_names.push_back("x" + std::to_string(j + 1));
  for (Index j = 0; j < p; ++j) d.snp_names.push_back("g" + std::to_string(j + 1));
  return d;
}

}  // namespace zipvc::testing
