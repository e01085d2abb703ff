#include "support.hpp"
#include "zipvc/errors.hpp"
#include "zipvc/quadform.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <doctest.h>

using namespace zipvc;
using namespace zipvc::testing;

namespace {

double tail(double q, std::vector<double> mu) { return imhof_tail(q, std::span<const double>(mu)).p; }

double chi2_sf(double x, double dof) {
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), x));
}

}  // namespace

TEST_CASE("psd_eigenvalues examples") {
  const MixtureSpec id = psd_eigenvalues(MatrixXd::Identity(3, 3));
  CHECK(id.eigenvalues == std::vector<double>{1.0, 1.0, 1.0});
  VectorXd v(4);
  v << 1, 2, 0, 0;
  const MixtureSpec rank1 = psd_eigenvalues(v * v.transpose());
  REQUIRE(rank1.eigenvalues.size() == 1);
  CHECK(rank1.eigenvalues[0] == doctest::Approx(5.0));
  CHECK(rank1.dropped == 3);
  MatrixXd neg = MatrixXd::Identity(2, 2);
  neg(1, 1) = -0.1;
  CHECK_THROWS_AS(psd_eigenvalues(neg), NumericalError);
  // Tiny negative values within tolerance are dropped silently.
  neg(1, 1) = -1e-13;
  CHECK(psd_eigenvalues(neg).eigenvalues.size() == 1);
}

TEST_CASE("psd_eigenvalues agree with a Jacobi oracle") {
  Stream s(5, {2});
  for (int rep = 0; rep < 5; ++rep) {
    MatrixXd a(6, 6);
    for (Index i = 0; i < 6; ++i)
      for (Index j = 0; j < 6; ++j) a(i, j) = s.normal();
    const MatrixXd m = a * a.transpose();
    const auto oracle = jacobi_eigenvalues(m);
    const MixtureSpec spec = psd_eigenvalues(m);
    REQUIRE(spec.eigenvalues.size() == oracle.size());
    for (std::size_t k = 0; k < oracle.size(); ++k) {
      CHECK(std::abs(spec.eigenvalues[k] - oracle[k]) < 1e-8 * std::max(1.0, oracle[0]));
      if (k > 0) CHECK(spec.eigenvalues[k] <= spec.eigenvalues[k - 1]);
    }
  }
}

TEST_CASE("Imhof closed forms at the 5% quantiles") {
  CHECK(std::abs(tail(3.841459, {1.0}) - 0.05) < 1e-4);
  CHECK(std::abs(tail(5.991465, {1.0, 1.0}) - 0.05) < 1e-4);
  CHECK(std::abs(tail(7.682918, {2.0}) - 0.05) < 1e-4);
  // chi-square(k) tails across a grid.
  for (int k : {1, 2, 3, 5, 10}) {
    for (double q : {0.5, 2.0, 6.0, 15.0, 30.0}) {
      CHECK(std::abs(tail(q, std::vector<double>(static_cast<std::size_t>(k), 1.0)) - chi2_sf(q, k)) < 1e-6);
    }
  }
}

TEST_CASE("Imhof properties") {
  const std::vector<double> mix{3.0, 1.2, 0.4, 0.05};
  CHECK(tail(0.0, mix) == 1.0);
  double previous = 1.0;
  for (double q = 0.5; q < 60.0; q += 2.5) {
    const double p = tail(q, mix);
    CHECK(p < previous);
    previous = p;
  }
  // Far tails are resolved to the absolute accuracy of the quadrature and
  // never fall below the floor; the flag marks exactly the floored values.
  int clamped = 0;
  for (const auto& m : {mix, std::vector<double>{1.0}, std::vector<double>{1.0, 1.0}}) {
    for (double q : {50.0, 100.0, 200.0, 1e3, 1e4}) {
      const TailProbability far = imhof_tail(q * m[0], std::span<const double>(m));
      CHECK(far.p < 1e-8);
      CHECK(far.p >= kPValueFloor);
      CHECK(far.clamped == (far.p == kPValueFloor));
      clamped += far.clamped ? 1 : 0;
    }
  }
  CHECK(clamped > 0);
  for (double c : {0.1, 10.0}) {
    std::vector<double> scaled = mix;
    for (double& m : scaled) m *= c;
    for (double q : {1.0, 5.0, 12.0}) CHECK(std::abs(tail(c * q, scaled) - tail(q, mix)) < 1e-8);
  }
  CHECK_THROWS_AS(tail(1.0, {}), InputError);
  CHECK_THROWS_AS(tail(1.0, {1.0, -0.5}), InputError);
}

TEST_CASE("Imhof agrees with Monte Carlo") {
  Stream s(2024, {1});
  for (int rep = 0; rep < 3; ++rep) {
    const int k = 1 + rep * 4;
    std::vector<double> mu(static_cast<std::size_t>(k));
    for (double& m : mu) m = 0.05 + 2.0 * s.uniform();
    const int draws = 200'000;
    std::vector<double> sample(draws);
    for (double& x : sample) {
      x = 0.0;
      for (double m : mu) {
        const double z = s.normal();
        x += m * z * z;
      }
    }
    std::vector<double> sorted = sample;
    std::sort(sorted.begin(), sorted.end());
    for (double level : {0.5, 0.9, 0.99}) {
      const double q = sorted[static_cast<std::size_t>(level * draws)];
      const double mc = 1.0 - level;
      CHECK(std::abs(tail(q, mu) - mc) < 5e-3);
    }
  }
}

TEST_CASE("Imhof handles widely spread and large-scale mixtures") {
  const std::vector<double> spread{1e4, 1.0, 1e-3, 1e-6};
  const double q = 2e4;
  const double p = tail(q, spread);
  // The leading term dominates: P(1e4 chi2_1 > 2e4) with a small correction.
  CHECK(p == doctest::Approx(chi2_sf(2.0, 1)).epsilon(1e-3));
  // 2125 chi2_1 <= sum <= 2125 chi2_3 bounds the tail.
  const std::vector<double> big{2125.0, 300.0, 10.0};
  const double p_big = tail(43759.0, big);
  CHECK(p_big > chi2_sf(43759.0 / 2125.0, 1));
  CHECK(p_big < chi2_sf(43759.0 / 2125.0, 3));
}
