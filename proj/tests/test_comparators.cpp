#include "support.hpp"
#include "zipvc/comparators.hpp"
#include "zipvc/errors.hpp"

#include <doctest.h>

using namespace zipvc;
using namespace zipvc::testing;

namespace {

ZipTruth poisson_truth() {
  ZipTruth t;
  t.alpha_pi = 60.0;  // pi = 1: no structural zeros
  return t;
}

}  // namespace

TEST_CASE("chi-square survival") {
  CHECK(chi_square_sf(3.841459, 1) == doctest::Approx(0.05).epsilon(1e-5));
  CHECK(chi_square_sf(0.0, 3) == 1.0);
  CHECK(chi_square_sf(-1.0, 3) == 1.0);
}

TEST_CASE("duplicate genotype column reduces the degrees of freedom") {
  Dataset d = make_zip_data(400, 1, 3, 31);
  d.genotypes.col(2) = d.genotypes.col(0);
  const auto all = wald_zip_all(d);
  CHECK(all[0].tested_columns == 2);
  CHECK(all[0].degrees_of_freedom == 2);
  CHECK(all[1].degrees_of_freedom == 2);
  CHECK(all[2].degrees_of_freedom == 4);
  CHECK(wald_poisson_hw(d).degrees_of_freedom == 2);
  CHECK(to_string(all[2].which) == "wald_zip_joint");
  CHECK_THROWS_AS(wald_zip(d, WaldTarget::poisson_hw), InputError);
}

TEST_CASE("block-diagonal joint test is the sum of the marginal tests") {
  const Dataset d = make_zip_data(500, 2, 2, 32);
  WaldOptions options;
  options.block_diagonal = true;
  const auto all = wald_zip_all(d, options);
  CHECK(all[2].statistic == doctest::Approx(all[0].statistic + all[1].statistic).epsilon(1e-10));
}

TEST_CASE("covariate rescaling leaves the Wald statistics unchanged") {
  const Dataset d = make_zip_data(500, 2, 2, 33);
  Dataset scaled = d;
  scaled.covariates *= 10.0;
  const auto a = wald_zip_all(d);
  const auto b = wald_zip_all(scaled);
  for (int t = 0; t < 3; ++t) CHECK(b[t].statistic == doctest::Approx(a[t].statistic).epsilon(1e-6));
  CHECK(wald_poisson_hw(scaled).statistic == doctest::Approx(wald_poisson_hw(d).statistic).epsilon(1e-8));
}

TEST_CASE("Wald and likelihood-ratio tests agree at large n") {
  // Correctly specified ZIP with a small genotype effect on lambda.
  Dataset d = make_zip_data(20'000, 1, 1, 34);
  Stream s(34, {2});
  for (Index i = 0; i < d.n(); ++i) {
    const double pi = 1.0 / (1.0 + std::exp(-(1.0 + 0.5 * d.covariates(i, 0))));
    const double lambda = std::exp(1.0 + 0.3 * d.covariates(i, 0) + 0.02 * d.genotypes(i, 0));
    d.y(i) = s.bernoulli(pi) ? static_cast<double>(s.poisson(lambda)) : 0.0;
  }
  const auto all = wald_zip_all(d);
  const NullFit null_fit = fit_null(d);
  const ZipAlternativeFit alt = fit_zip_alternative(d);
  const double lrt = 2.0 * (alt.fit.loglik - null_fit.loglik);
  CHECK(std::abs(chi_square_sf(lrt, 2) - all[2].p_value) < 0.01);
}

TEST_CASE("joint ZIP Wald test holds its size") {
  int rejections = 0;
  const int reps = 500;
  for (int r = 0; r < reps; ++r) {
    const Dataset d = make_zip_data(1000, 1, 2, 40'000 + static_cast<std::uint64_t>(r));
    rejections += wald_zip(d, WaldTarget::joint).p_value <= 0.05 ? 1 : 0;
  }
  const double size = static_cast<double>(rejections) / reps;
  CHECK(size >= 0.02);
  CHECK(size <= 0.06);
}

TEST_CASE("Huber-White Poisson test holds its size on Poisson data") {
  int rejections = 0;
  const int reps = 500;
  for (int r = 0; r < reps; ++r) {
    const Dataset d = make_zip_data(500, 1, 2, 50'000 + static_cast<std::uint64_t>(r), poisson_truth());
    rejections += wald_poisson_hw(d).p_value <= 0.05 ? 1 : 0;
  }
  const double size = static_cast<double>(rejections) / reps;
  CHECK(size >= 0.03);
  CHECK(size <= 0.07);
}

TEST_CASE("sandwich and model covariances agree on Poisson data") {
  const Dataset d = make_zip_data(10'000, 1, 2, 35, poisson_truth());
  const PoissonSandwichFit fit = fit_poisson_sandwich(d);
  CHECK(relative_error(fit.sandwich_covariance, fit.model_covariance) < 0.05);
  // Under zero inflation the sandwich is wider than the model covariance.
  const Dataset z = make_zip_data(10'000, 1, 2, 36);
  const PoissonSandwichFit zfit = fit_poisson_sandwich(z);
  CHECK(zfit.sandwich_covariance.trace() > 1.2 * zfit.model_covariance.trace());
}
