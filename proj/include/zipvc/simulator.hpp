#pragma once

#include "zipvc/dataset.hpp"
#include "zipvc/rng.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace zipvc {

/// Marginal allele frequencies and latent correlation for the Gaussian-copula
/// genotype sampler.
struct GenotypeProfile {
  std::string name;
  std::vector<std::string> snps;
  VectorXd maf;
  MatrixXd ld;                // latent correlation R, unit diagonal
  std::vector<Index> causal;  // the three outcome-associated SNPs, 0-based
  bool repair = false;        // project R onto the nearest PSD correlation matrix
};

enum class AlternativeMode { null, both, pi_only, lambda_only };

struct SimConfig {
  std::string setting = "custom";
  Index n = 1000;
  int replicates = 100;
  int resamples = 200;  // B for the variance-component tests
  std::uint64_t seed = 1;
  GenotypeProfile profile;
  bool include_covariates = true;
  double alpha_pi = 1.5;
  double alpha_lambda = 1.3;
  VectorXd beta_pi = (VectorXd(5) << 0.75, 0.5, 0.25, 1.0, 1.0).finished();
  VectorXd beta_lambda = (VectorXd(5) << 0.25, 0.5, 0.75, 1.0, 1.0).finished();
  VectorXd gamma_pi = VectorXd::Zero(3);
  VectorXd gamma_lambda = VectorXd::Zero(3);
  double rho_xg = 0.0;
  MatrixXd dependence = default_dependence();  // 5 x 3, maps G_Y to X
  double overdispersion_sd = 0.0;
  AlternativeMode mode = AlternativeMode::null;
  double alpha = 0.05;
  std::vector<std::string> tests;  // empty = every test

  /// Transpose of the printed 3 x 5 genotype-covariate dependence matrix.
  static MatrixXd default_dependence();
};

/// Parses a SimConfig document. `base_dir` resolves a profile given as a file
/// name. Errors are InputError with the path of the offending key.
SimConfig sim_config_from_json(const nlohmann::ordered_json& doc, const std::filesystem::path& base_dir = {});
SimConfig load_sim_config(const std::filesystem::path& path);
GenotypeProfile profile_from_json(const nlohmann::ordered_json& doc, const std::string& where = "profile");
nlohmann::ordered_json to_json(const SimConfig& config);
nlohmann::ordered_json to_json(const GenotypeProfile& profile);

/// The five covariates: binomial and normal building blocks combined linearly.
MatrixXd gen_covariates(Index n, Stream& stream);

/// Dosages from two independent thresholded MVN(0, R) haplotypes per sample.
MatrixXd gen_genotypes(Index n, const GenotypeProfile& profile, Stream& stream);

/// X_dep = X_ind + rho_xg * G_Y * A', the observed covariates when rho_xg > 0.
MatrixXd apply_dependence(const MatrixXd& covariates, const MatrixXd& genotypes, const SimConfig& config);

struct OutcomeDraw {
  VectorXd y;
  Index clamped = 0;  // samples whose log(lambda) hit the overflow guard
};

/// `covariates` are the observed (possibly G-dependent) covariates.
OutcomeDraw gen_outcome(const MatrixXd& covariates, const MatrixXd& genotypes, const SimConfig& config,
                        Stream& stream);

/// One replicate's data set, from streams keyed by (seed, replicate).
Dataset simulate_dataset(const SimConfig& config, std::uint64_t replicate);

enum class StudyTest : int {
  vc_pi,
  vc_lambda,
  vc_min,
  vc_fisher,
  vc_std,
  wald_zip_pi,
  wald_zip_lambda,
  wald_zip_joint,
  wald_poisson_hw,
};

inline constexpr int kStudyTestCount = 9;
const std::array<std::string, kStudyTestCount>& study_test_names();

struct TestSummary {
  std::string test;
  int replicates = 0;  // replicates where the test produced a p-value
  int rejections = 0;
  double rate = 0.0;
  double se = 0.0;
  int failures = 0;
};

struct StudyResult {
  std::string setting;
  std::vector<TestSummary> summaries;  // roster order
  MatrixXd pvalues;                    // replicates x 9, NaN where a test failed or was not run
  Index outcome_clamps = 0;
};

/// Replicates run in parallel over a work queue; the result does not depend
/// on the thread count.
StudyResult run_study(const SimConfig& config);

/// Tab-separated `setting, test, replicates, rejections, rate, se`.
std::string study_tsv(const StudyResult& result);

namespace reference {
StudyResult run_study(const SimConfig& config);
}

}  // namespace zipvc
