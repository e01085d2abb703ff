#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace zipvc {

/// Mixing weights of a sum of scaled independent chi-square(1) variables.
struct MixtureSpec {
  std::vector<double> eigenvalues;  // descending, all above the truncation threshold
  int dropped = 0;
  double threshold = 0.0;
};

/// Eigenvalues of (M + M')/2, descending. Values below rel_tol * max are
/// dropped; a negative value below -rel_tol * max throws NumericalError.
MixtureSpec psd_eigenvalues(const Eigen::MatrixXd& matrix, double rel_tol = 1e-10);

struct TailProbability {
  double p = 1.0;
  bool clamped = false;  // true when the raw value fell below the 1e-12 floor
};

inline constexpr double kPValueFloor = 1e-12;

/// P(sum_k mu_k Z_k^2 > q) by Imhof's inversion formula
///   1/2 + (1/pi) int_0^inf sin(theta(u)) / (u rho(u)) du,
///   theta(u) = 1/2 sum atan(mu_k u) - q u / 2,  rho(u) = prod (1 + mu_k^2 u^2)^{1/4},
/// integrated to an absolute error well under 1e-6. The result is clamped to [1e-12, 1].
TailProbability imhof_tail(double q, std::span<const double> eigenvalues);

inline TailProbability imhof_tail(double q, const MixtureSpec& mixture) {
  return imhof_tail(q, std::span<const double>(mixture.eigenvalues));
}

}  // namespace zipvc
