#include "zipvc/score.hpp"

#include "zipvc/errors.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace zipvc {

namespace {

// Non-PSD tolerance for kernel matrices, relative to the largest eigenvalue.
constexpr double kKernelPsdTolerance = 1e-8;
// Eigenvalues below this fraction of the largest count as numerically zero.
constexpr double kKernelRankTolerance = 1e-10;

double kernel_value(const KernelSpec& kernel, const MatrixXd& g, Index i, Index j) {
  switch (kernel.kind) {
    case KernelKind::linear:
      return g.row(i).dot(g.row(j));
    case KernelKind::polynomial:
      return std::pow(1.0 + g.row(i).dot(g.row(j)), kernel.parameter);
    case KernelKind::gaussian: {
      const double d2 = (g.row(i) - g.row(j)).squaredNorm();
      return std::exp(-d2 / (2.0 * kernel.parameter * kernel.parameter));
    }
  }
  return 0.0;
}

void check_kernel(const KernelSpec& kernel) {
  if (kernel.kind == KernelKind::polynomial &&
      !(kernel.parameter >= 1.0 && kernel.parameter == std::floor(kernel.parameter))) {
    throw InputError("polynomial kernel degree must be a positive integer");
  }
  if (kernel.kind == KernelKind::gaussian && !(kernel.parameter > 0.0)) {
    throw InputError("Gaussian kernel bandwidth must be positive");
  }
}

double parse_positive(std::string_view text, const char* what) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || !(value > 0.0)) {
    throw InputError(std::string("invalid ") + what + " '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

double residual_pi(double y, double pi0, double lambda0) {
  if (y > 0.0) return -(1.0 - pi0);
  // 1 - pi(1 - e^{-lambda}) written as (1 - pi) + pi e^{-lambda} keeps both limits finite.
  const double p_zero = (1.0 - pi0) + pi0 * std::exp(-lambda0);
  return pi0 * (1.0 - pi0) * -std::expm1(-lambda0) / p_zero;
}

double residual_lambda(double y, double pi0, double lambda0) {
  if (y > 0.0) return -(y - lambda0);
  const double e = std::exp(-lambda0);
  const double p_zero = (1.0 - pi0) + pi0 * e;
  return pi0 * lambda0 * e / p_zero;
}

VectorXd residuals_pi(const VectorXd& y, const VectorXd& pi0, const VectorXd& lambda0) {
  VectorXd r(y.size());
  for (Index i = 0; i < y.size(); ++i) r(i) = residual_pi(y(i), pi0(i), lambda0(i));
  return r;
}

VectorXd residuals_lambda(const VectorXd& y, const VectorXd& pi0, const VectorXd& lambda0) {
  VectorXd r(y.size());
  for (Index i = 0; i < y.size(); ++i) r(i) = residual_lambda(y(i), pi0(i), lambda0(i));
  return r;
}

BasisSpec BasisSpec::parse(std::string_view text) {
  BasisSpec spec;
  if (text == "linear" || text == "identity") return spec;
  if (text.substr(0, 5) != "kpca:") throw InputError("unknown kernel '" + std::string(text) + "'");
  spec.kind = BasisKind::kernel_pca;
  std::string_view rest = text.substr(5);
  const auto colon = rest.find(':');
  const std::string_view name = rest.substr(0, colon);
  const std::string_view arg = colon == std::string_view::npos ? std::string_view{} : rest.substr(colon + 1);
  if (name == "linear" && arg.empty()) {
    spec.kernel = {KernelKind::linear, 1.0};
  } else if (name == "gaussian" && !arg.empty()) {
    spec.kernel = {KernelKind::gaussian, parse_positive(arg, "Gaussian bandwidth")};
  } else if (name == "poly" && !arg.empty()) {
    spec.kernel = {KernelKind::polynomial, parse_positive(arg, "polynomial degree")};
  } else {
    throw InputError("unknown kernel '" + std::string(text) + "'");
  }
  check_kernel(spec.kernel);
  return spec;
}

std::string BasisSpec::describe() const {
  if (kind == BasisKind::identity) return "linear";
  std::ostringstream out;
  out << "kpca:";
  switch (kernel.kind) {
    case KernelKind::linear: out << "linear"; break;
    case KernelKind::polynomial: out << "poly:" << kernel.parameter; break;
    case KernelKind::gaussian: out << "gaussian:" << kernel.parameter; break;
  }
  return out.str();
}

MatrixXd kernel_matrix(const MatrixXd& genotypes, const KernelSpec& kernel) {
  check_kernel(kernel);
  const Index n = genotypes.rows();
  MatrixXd k(n, n);
#pragma omp parallel for schedule(dynamic, 16)
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j <= i; ++j) k(i, j) = kernel_value(kernel, genotypes, i, j);
  }
  k.triangularView<Eigen::StrictlyUpper>() = k.transpose();
  return k;
}

namespace reference {

MatrixXd kernel_matrix(const MatrixXd& genotypes, const KernelSpec& kernel) {
  check_kernel(kernel);
  const Index n = genotypes.rows();
  MatrixXd k(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) k(i, j) = kernel_value(kernel, genotypes, std::max(i, j), std::min(i, j));
  }
  return k;
}

}  // namespace reference

Basis build_basis(const MatrixXd& genotypes, const BasisSpec& spec) {
  Basis basis;
  basis.spec = spec;
  if (genotypes.cols() < 1 || genotypes.rows() < 1) throw InputError("build_basis: empty genotype matrix");
  if (spec.kind == BasisKind::identity) {
    basis.psi = spec.center ? MatrixXd(genotypes.rowwise() - genotypes.colwise().mean()) : genotypes;
    for (Index j = 0; j < basis.psi.cols(); ++j) {
      if (basis.psi.col(j).cwiseAbs().maxCoeff() == 0.0) throw InputError("build_basis: zero basis column");
    }
    return basis;
  }

  const Index n = genotypes.rows();
  MatrixXd k = kernel_matrix(genotypes, spec.kernel);
  if (spec.center) {
    const VectorXd row_mean = k.rowwise().mean();
    const double grand = row_mean.mean();
    k = (k.colwise() - row_mean).rowwise() - row_mean.transpose();
    k.array() += grand;
  }
  k = 0.5 * (k + k.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(k);
  if (eig.info() != Eigen::Success) throw NumericalError("kernel eigendecomposition failed");
  const VectorXd values = eig.eigenvalues().reverse();
  const MatrixXd vectors = eig.eigenvectors().rowwise().reverse();
  const double top = values(0);
  if (!(top > 0.0)) throw NumericalError("kernel matrix has no positive eigenvalue");
  if (values(n - 1) < -kKernelPsdTolerance * top) {
    std::ostringstream msg;
    msg << "kernel matrix is not positive semi-definite (eigenvalue " << values(n - 1) << ")";
    throw NumericalError(msg.str());
  }
  Index numerical_rank = 0;
  while (numerical_rank < n && values(numerical_rank) > kKernelRankTolerance * top) ++numerical_rank;

  Index rank = 0;
  if (spec.rank) {
    rank = *spec.rank;
    if (rank < 1) throw InputError("build_basis: requested rank must be at least 1");
    if (rank > numerical_rank) {
      throw InputError("build_basis: requested rank " + std::to_string(rank) + " exceeds numerical rank " +
                       std::to_string(numerical_rank));
    }
  } else {
    if (!(spec.rank_fraction > 0.0 && spec.rank_fraction <= 1.0)) {
      throw InputError("build_basis: rank fraction must lie in (0, 1]");
    }
    const double total = values.head(numerical_rank).sum();
    double covered = 0.0;
    while (rank < numerical_rank) {
      covered += values(rank++);
      if (covered >= spec.rank_fraction * total) break;
    }
  }
  basis.eigenvalues = values.head(rank);
  basis.psi = vectors.leftCols(rank) * basis.eigenvalues.cwiseSqrt().asDiagonal();
  return basis;
}

VectorXd weighted_score(const MatrixXd& psi, const VectorXd& residuals, const VectorXd& weights) {
  return psi.transpose() * (residuals.array() * weights.array()).matrix() / weights.sum();
}

ScoreResult score_statistics(const NullFit& null_fit, const Dataset& data, const Basis& basis) {
  const Index n = data.n();
  if (basis.psi.rows() != n || null_fit.pi0.size() != n || null_fit.lambda0.size() != n) {
    throw InputError("score_statistics: dimension mismatch between fit, data and basis");
  }
  ScoreResult out;
  out.residuals_pi = residuals_pi(data.y, null_fit.pi0, null_fit.lambda0);
  out.residuals_lambda = residuals_lambda(data.y, null_fit.pi0, null_fit.lambda0);
  const double nd = static_cast<double>(n);
  out.s_pi = basis.psi.transpose() * out.residuals_pi / nd;
  out.s_lambda = basis.psi.transpose() * out.residuals_lambda / nd;
  out.q_pi = nd * out.s_pi.dot(out.s_pi);
  out.q_lambda = nd * out.s_lambda.dot(out.s_lambda);
  return out;
}

}  // namespace zipvc
