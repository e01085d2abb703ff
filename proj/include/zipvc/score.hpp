#pragma once

#include "zipvc/dataset.hpp"
#include "zipvc/zip_model.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace zipvc {

/// Score residual for the zero-inflation predictor:
///   y = 0: pi(1-pi)(1-e^{-lambda}) / (1 - pi(1-e^{-lambda}))
///   y > 0: -(1 - pi)
double residual_pi(double y, double pi0, double lambda0);

/// Score residual for the Poisson-rate predictor:
///   y = 0: pi lambda e^{-lambda} / (1 - pi(1-e^{-lambda}))
///   y > 0: -(y - lambda)
double residual_lambda(double y, double pi0, double lambda0);

VectorXd residuals_pi(const VectorXd& y, const VectorXd& pi0, const VectorXd& lambda0);
VectorXd residuals_lambda(const VectorXd& y, const VectorXd& pi0, const VectorXd& lambda0);

enum class KernelKind { linear, polynomial, gaussian };

/// linear: g.h; polynomial: (1 + g.h)^degree; gaussian: exp(-|g-h|^2 / (2 sigma^2)).
struct KernelSpec {
  KernelKind kind = KernelKind::linear;
  double parameter = 1.0;  // polynomial degree or Gaussian bandwidth
};

enum class BasisKind { identity, kernel_pca };

struct BasisSpec {
  BasisKind kind = BasisKind::identity;
  KernelSpec kernel;
  std::optional<Index> rank;     // fixed K; otherwise the cumulative-eigenvalue rule
  double rank_fraction = 0.999;  // smallest K whose eigenvalues cover this share
  bool center = false;           // column-center G (identity) or double-center the kernel matrix

  /// Parses the CLI form: `linear`, `kpca:linear`, `kpca:gaussian:<sigma>`, `kpca:poly:<degree>`.
  static BasisSpec parse(std::string_view text);
  std::string describe() const;
};

struct Basis {
  MatrixXd psi;  // n x K
  BasisSpec spec;
  VectorXd eigenvalues;  // kernel_pca only: retained eigenvalues, descending
};

/// n x n kernel matrix; rows are filled in parallel.
MatrixXd kernel_matrix(const MatrixXd& genotypes, const KernelSpec& kernel);

Basis build_basis(const MatrixXd& genotypes, const BasisSpec& spec);

struct ScoreResult {
  VectorXd s_pi;
  VectorXd s_lambda;
  double q_pi = 0.0;
  double q_lambda = 0.0;
  VectorXd residuals_pi;
  VectorXd residuals_lambda;
};

/// S = n^{-1} sum_i r_i Psi(G_i) and Q = n S'S for both components.
ScoreResult score_statistics(const NullFit& null_fit, const Dataset& data, const Basis& basis);

/// Weighted score vector (sum_i v_i)^{-1} sum_i v_i r_i Psi(G_i).
VectorXd weighted_score(const MatrixXd& psi, const VectorXd& residuals, const VectorXd& weights);

namespace reference {
MatrixXd kernel_matrix(const MatrixXd& genotypes, const KernelSpec& kernel);
}

}  // namespace zipvc
