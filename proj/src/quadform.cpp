#include "zipvc/quadform.hpp"

#include "zipvc/errors.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>
#include <vector>

namespace zipvc {

namespace {

constexpr double kPi = boost::math::constants::pi<double>();
// Absolute error budget for the truncated tail of the raw integral.
constexpr double kPanelTolerance = 1e-9;
constexpr long kMaxPanels = 4'000'000;
// Panels span at most half a period of a smooth integrand, so one fixed
// Kronrod rule per panel is accurate. Adaptive bisection uses a tolerance
// relative to the panel value and stalls on near-cancelling panels.
constexpr unsigned kPanelDepth = 0;

struct ImhofIntegrand {
  std::span<const double> mu;
  double q;

  double operator()(double u) const {
    if (u <= 0.0) {
      double slope = -q;
      for (double m : mu) slope += m;
      return 0.5 * slope;
    }
    double theta = -0.5 * q * u;
    double log_rho = 0.0;
    for (double m : mu) {
      theta += 0.5 * std::atan(m * u);
      log_rho += 0.25 * std::log1p(m * m * u * u);
    }
    return std::sin(theta) / (u * std::exp(log_rho));
  }

  // d theta / du at u.
  double phase_slope(double u) const {
    double s = -0.5 * q;
    for (double m : mu) s += 0.5 * m / (1.0 + m * m * u * u);
    return s;
  }

  // Amplitude 1 / (u rho(u)) and the derivatives used by the tail estimate.
  double amplitude(double u) const {
    double log_rho = 0.0;
    for (double m : mu) log_rho += 0.25 * std::log1p(m * m * u * u);
    return 1.0 / (u * std::exp(log_rho));
  }

  double log_amplitude_slope(double u) const {
    double s = -1.0 / u;
    for (double m : mu) s -= 0.5 * m * m * u / (1.0 + m * m * u * u);
    return s;
  }

  double phase_curvature(double u) const {
    double c = 0.0;
    for (double m : mu) {
      const double d = 1.0 + m * m * u * u;
      c -= m * m * m * u / (d * d);
    }
    return c;
  }

  double phase(double u) const {
    double theta = -0.5 * q * u;
    for (double m : mu) theta += 0.5 * std::atan(m * u);
    return theta;
  }

  // (A / theta')' in closed form.
  double ratio_slope(double u) const {
    const double a = amplitude(u);
    const double slope = phase_slope(u);
    return a * log_amplitude_slope(u) / slope - a * phase_curvature(u) / (slope * slope);
  }

  // int_u^inf A sin(theta) by parts twice, with g = A / theta' and
  // h = g' / theta': g cos(theta) - h sin(theta) + R, where
  // |R| <= 2 |h' / theta'| while the derivatives keep their signs.
  std::pair<double, double> tail_by_parts(double u) const {
    const double slope = phase_slope(u);
    const double g = amplitude(u) / slope;
    const double h = ratio_slope(u) / slope;
    const double t = phase(u);
    const double delta = 1e-4 * u;
    const double h_up = ratio_slope(u + delta) / phase_slope(u + delta);
    const double h_down = ratio_slope(u - delta) / phase_slope(u - delta);
    const double dh = (h_up - h_down) / (2.0 * delta);
    return {g * std::cos(t) - h * std::sin(t), 2.0 * std::abs(dh / slope)};
  }

  // Upper bound on int_u^inf 1 / (t rho(t)) dt from rho(t) >= prod sqrt(mu_k t).
  double amplitude_tail(double u) const {
    const double k = static_cast<double>(mu.size());
    double log_prod = 0.0;
    for (double m : mu) log_prod += 0.5 * std::log(m * u);
    return (2.0 / k) * std::exp(-log_prod);
  }
};

}  // namespace

MixtureSpec psd_eigenvalues(const Eigen::MatrixXd& matrix, double rel_tol) {
  if (matrix.rows() != matrix.cols()) throw InputError("psd_eigenvalues: matrix is not square");
  MixtureSpec spec;
  if (matrix.rows() == 0) return spec;
  const Eigen::MatrixXd sym = 0.5 * (matrix + matrix.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("psd_eigenvalues: eigendecomposition failed");
  const Eigen::VectorXd values = eig.eigenvalues().reverse();
  const double top = values(0);
  spec.threshold = rel_tol * std::max(top, 0.0);
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    const double v = values(k);
    if (v > spec.threshold && v > 0.0) {
      spec.eigenvalues.push_back(v);
    } else {
      if (v < -spec.threshold || (top <= 0.0 && v < 0.0)) {
        std::ostringstream msg;
        msg << "covariance estimate has a materially negative eigenvalue " << v << " (largest " << top << ")";
        throw NumericalError(msg.str());
      }
      ++spec.dropped;
    }
  }
  return spec;
}

TailProbability imhof_tail(double q, std::span<const double> eigenvalues) {
  if (eigenvalues.empty()) throw InputError("imhof_tail: mixture has no eigenvalues");
  for (double m : eigenvalues) {
    if (!(m > 0.0) || !std::isfinite(m)) throw InputError("imhof_tail: eigenvalues must be positive and finite");
  }
  if (!std::isfinite(q)) throw InputError("imhof_tail: statistic is not finite");
  if (q <= 0.0) return {1.0, false};

  // The tail probability is invariant to a common rescaling of q and mu;
  // working with max(mu) = 1 keeps the panel count independent of scale.
  const double mu_max = *std::max_element(eigenvalues.begin(), eigenvalues.end());
  std::vector<double> scaled(eigenvalues.begin(), eigenvalues.end());
  for (double& m : scaled) m /= mu_max;
  q /= mu_max;
  const ImhofIntegrand f{scaled, q};
  const double half_period = 2.0 * kPi / q;
  double width = std::min(half_period, 1.0);

  using Quadrature = boost::math::quadrature::gauss_kronrod<double, 15>;
  double integral = 0.0;
  double lower = 0.0;
  bool done = false;
  for (long panel = 0; panel < kMaxPanels; ++panel) {
    const double upper = lower + width;
    integral += Quadrature::integrate(f, lower, upper, kPanelDepth, 1e-10);
    lower = upper;

    if (f.amplitude_tail(lower) < kPanelTolerance) {
      done = true;
      break;
    }
    // theta' < 0 and decreasing from here on, so the by-parts bound holds.
    if (f.phase_slope(lower) <= -0.25 * q) {
      const auto [remainder, bound] = f.tail_by_parts(lower);
      if (bound < kPanelTolerance) {
        integral += remainder;
        done = true;
        break;
      }
    }
    width = std::min(half_period, std::max(width, lower));
  }
  if (!done) throw NumericalError("imhof_tail: quadrature did not converge");

  const double raw = 0.5 + integral / kPi;
  TailProbability out;
  if (raw < kPValueFloor) {
    out.p = kPValueFloor;
    out.clamped = true;
  } else {
    out.p = std::min(raw, 1.0);
  }
  return out;
}

}  // namespace zipvc
