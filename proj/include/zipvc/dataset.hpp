#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace zipvc {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Row-aligned outcome, genotype and covariate data for one SNP set.
///
/// The covariate matrix never carries an intercept column; every fitter
/// prepends one internally.
struct Dataset {
  std::vector<std::string> ids;
  VectorXd y;           // non-negative integer counts
  MatrixXd genotypes;   // n x p dosages in [0, 2]
  MatrixXd covariates;  // n x q, q may be 0
  std::vector<std::string> snp_names;
  std::vector<std::string> covariate_names;

  Index n() const { return y.size(); }
  Index p() const { return genotypes.cols(); }
  Index q() const { return covariates.cols(); }
};

enum class MissingPolicy {
  listwise,     // drop any sample with a missing y, X or G cell
  mean_impute,  // genotype cells imputed by column mean; missing y or X still drops the sample
};

struct LoadPolicy {
  MissingPolicy missing = MissingPolicy::listwise;
};

/// Reads the phenotype (`id,y`), genotype (`id,<snp>...`) and covariate
/// (`id,<name>...`) CSV files and returns the intersection of their samples
/// in phenotype-file order. An empty covariate path means q = 0.
///
/// Throws InputError on any schema or value violation.
Dataset load_dataset(const std::filesystem::path& pheno_path,
                     const std::filesystem::path& geno_path,
                     const std::filesystem::path& covar_path,
                     const LoadPolicy& policy = {});

struct GenotypeTable {
  std::vector<std::string> ids;
  std::vector<std::string> snp_names;
  MatrixXd genotypes;
};

/// Reads a genotype CSV on its own; missing cells are an error.
GenotypeTable load_genotypes(const std::filesystem::path& path);

/// Checks every Dataset invariant; throws InputError naming the offending column.
void validate_dataset(const Dataset& data);

/// Writes the three CSV files that load_dataset reads back unchanged.
void write_dataset(const Dataset& data,
                   const std::filesystem::path& pheno_path,
                   const std::filesystem::path& geno_path,
                   const std::filesystem::path& covar_path);

void write_genotype_csv(const std::filesystem::path& path,
                        const std::vector<std::string>& ids,
                        const std::vector<std::string>& names,
                        const MatrixXd& genotypes);

struct DroppedColumn {
  Index index;
  Index correlated_with;
  double correlation;
};

struct PruneReport {
  std::vector<Index> kept;
  std::vector<DroppedColumn> dropped;
  double threshold = 0.99;
};

/// Greedy left-to-right LD pruning: a column is dropped iff its absolute
/// Pearson correlation with an earlier kept column exceeds `threshold`.
/// The first such kept column is recorded as the reason.
PruneReport ld_prune(const MatrixXd& genotypes, double threshold,
                     const std::vector<std::string>& names = {});

/// Columns of `genotypes` listed in `report.kept`, in order.
MatrixXd select_columns(const MatrixXd& genotypes, const std::vector<Index>& columns);

double pearson_correlation(const VectorXd& a, const VectorXd& b);

}  // namespace zipvc
