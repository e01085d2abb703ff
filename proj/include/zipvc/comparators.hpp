#pragma once

#include "zipvc/dataset.hpp"
#include "zipvc/zip_model.hpp"

#include <array>
#include <string_view>

namespace zipvc {

enum class WaldTarget { pi, lambda, joint, poisson_hw };

std::string_view to_string(WaldTarget target);

struct WaldResult {
  double statistic = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 1.0;
  WaldTarget which = WaldTarget::joint;
  Index tested_columns = 0;  // genotype columns left after LD pruning
  int iterations = 0;
};

struct WaldOptions {
  double prune_threshold = 0.99;
  FitConfig fit;
  bool block_diagonal = false;  // test hook: zero the (pi, lambda) cross-covariance in the joint test
};

/// ZIP fit with [1, X, G_pruned] in both linear predictors.
struct ZipAlternativeFit {
  ZipFit fit;
  std::vector<Index> kept;  // genotype columns used
  Index covariate_columns = 0;  // 1 + q; genotype coefficients follow
};

ZipAlternativeFit fit_zip_alternative(const Dataset& data, const WaldOptions& options = {});

/// The pi, lambda and joint Wald tests from one alternative fit.
std::array<WaldResult, 3> wald_zip_all(const Dataset& data, const WaldOptions& options = {});

WaldResult wald_zip(const Dataset& data, WaldTarget which, const WaldOptions& options = {});

struct PoissonSandwichFit {
  VectorXd beta;
  MatrixXd model_covariance;     // A^{-1}
  MatrixXd sandwich_covariance;  // A^{-1} B A^{-1}
  std::vector<Index> kept;
  Index covariate_columns = 0;
};

PoissonSandwichFit fit_poisson_sandwich(const Dataset& data, double prune_threshold = 0.99);

/// Poisson regression Wald test of the genotype coefficients with the
/// Huber-White covariance.
WaldResult wald_poisson_hw(const Dataset& data, const WaldOptions& options = {});

/// Survival function of chi-square(dof) at x.
double chi_square_sf(double x, double dof);

}  // namespace zipvc
