#include "zipvc/simulator.hpp"

#include "zipvc/comparators.hpp"
#include "zipvc/errors.hpp"
#include "zipvc/omnibus.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <sstream>

namespace zipvc {

namespace {

using json = nlohmann::ordered_json;

constexpr double kMaxLogLambda = 30.0;
constexpr double kMaxFailureFraction = 0.05;

[[noreturn]] void config_error(const std::string& where, const std::string& what) {
  throw InputError("invalid config at " + where + ": " + what);
}

double get_number(const json& doc, const std::string& key, const std::string& where, double fallback) {
  if (!doc.contains(key)) return fallback;
  const auto& v = doc.at(key);
  if (!v.is_number()) config_error(where + "." + key, "expected a number");
  return v.get<double>();
}

VectorXd get_vector(const json& doc, const std::string& key, const std::string& where, const VectorXd& fallback,
                    Index expected = -1) {
  if (!doc.contains(key)) return fallback;
  const auto& v = doc.at(key);
  if (!v.is_array()) config_error(where + "." + key, "expected an array of numbers");
  if (expected >= 0 && static_cast<Index>(v.size()) != expected) {
    config_error(where + "." + key, "expected " + std::to_string(expected) + " numbers");
  }
  VectorXd out(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) config_error(where + "." + key + "[" + std::to_string(i) + "]", "expected a number");
    out(static_cast<Index>(i)) = v[i].get<double>();
  }
  return out;
}

MatrixXd get_matrix(const json& doc, const std::string& key, const std::string& where, Index rows, Index cols) {
  const auto& v = doc.at(key);
  const std::string path = where + "." + key;
  if (!v.is_array() || static_cast<Index>(v.size()) != rows) {
    config_error(path, "expected " + std::to_string(rows) + " rows");
  }
  MatrixXd out(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto& row = v[static_cast<std::size_t>(r)];
    const std::string row_path = path + "[" + std::to_string(r) + "]";
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      config_error(row_path, "expected " + std::to_string(cols) + " numbers");
    }
    for (Index c = 0; c < cols; ++c) {
      const auto& cell = row[static_cast<std::size_t>(c)];
      if (!cell.is_number()) config_error(row_path + "[" + std::to_string(c) + "]", "expected a number");
      out(r, c) = cell.get<double>();
    }
  }
  return out;
}

json matrix_json(const MatrixXd& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const VectorXd& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

std::string mode_name(AlternativeMode mode) {
  switch (mode) {
    case AlternativeMode::null: return "null";
    case AlternativeMode::both: return "both";
    case AlternativeMode::pi_only: return "pi_only";
    case AlternativeMode::lambda_only: return "lambda_only";
  }
  return "null";
}

void validate_profile(const GenotypeProfile& profile, const std::string& where) {
  const Index p = profile.maf.size();
  if (p < 1) config_error(where + ".maf", "at least one SNP is required");
  if (static_cast<Index>(profile.snps.size()) != p) config_error(where + ".snps", "length differs from maf");
  for (Index j = 0; j < p; ++j) {
    if (!(profile.maf(j) > 0.0 && profile.maf(j) <= 0.5)) {
      config_error(where + ".maf[" + std::to_string(j) + "]", "must lie in (0, 0.5]");
    }
  }
  if (profile.ld.rows() != p || profile.ld.cols() != p) config_error(where + ".ld", "must be p x p");
  if (!profile.ld.isApprox(profile.ld.transpose(), 1e-12)) config_error(where + ".ld", "must be symmetric");
  for (Index j = 0; j < p; ++j) {
    if (std::abs(profile.ld(j, j) - 1.0) > 1e-12) config_error(where + ".ld", "diagonal must be 1");
  }
  if (profile.causal.size() != 3) config_error(where + ".causal", "expected 3 indices");
  for (std::size_t c = 0; c < profile.causal.size(); ++c) {
    if (profile.causal[c] < 0 || profile.causal[c] >= p) {
      config_error(where + ".causal[" + std::to_string(c) + "]", "index out of range");
    }
  }
}

// Nearest correlation matrix by eigenvalue clipping and diagonal rescaling.
MatrixXd repair_correlation(const MatrixXd& r) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (r + r.transpose()));
  const VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
  MatrixXd fixed = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
  const VectorXd inv_sd = fixed.diagonal().cwiseSqrt().cwiseInverse();
  fixed = inv_sd.asDiagonal() * fixed * inv_sd.asDiagonal();
  fixed.diagonal().setOnes();
  return fixed;
}

// F with F F' = R, from a pivoted LDL' so that perfectly correlated columns
// come out exactly equal.
MatrixXd correlation_factor(const GenotypeProfile& profile) {
  const MatrixXd r = profile.repair ? repair_correlation(profile.ld) : profile.ld;
  Eigen::LDLT<MatrixXd> ldlt(r);
  const VectorXd d = ldlt.vectorD();
  // Zero pivots of a singular R make info() report an issue; only negative
  // pivots mean R is not PSD.
  if ((d.array() < -1e-10).any() || !d.allFinite()) {
    throw InputError("LD matrix of profile '" + profile.name +
                     "' is not positive semi-definite; set \"repair\": true to project it onto the nearest "
                     "correlation matrix");
  }
  const MatrixXd l = ldlt.matrixL();
  MatrixXd factor = l * d.cwiseMax(0.0).cwiseSqrt().asDiagonal();
  return ldlt.transpositionsP().transpose() * factor;
}

struct Generated {
  Dataset data;
  Index clamps = 0;
};

Generated generate(const SimConfig& config, std::uint64_t replicate) {
  Stream covariate_stream(config.seed, {static_cast<std::uint64_t>(StreamPurpose::covariates), replicate});
  Stream genotype_stream(config.seed, {static_cast<std::uint64_t>(StreamPurpose::genotypes), replicate});
  Stream outcome_stream(config.seed, {static_cast<std::uint64_t>(StreamPurpose::outcome), replicate});
  Generated out;
  Dataset& data = out.data;
  MatrixXd x = config.include_covariates ? gen_covariates(config.n, covariate_stream) : MatrixXd(config.n, 0);
  data.genotypes = gen_genotypes(config.n, config.profile, genotype_stream);
  data.covariates = apply_dependence(x, data.genotypes, config);
  OutcomeDraw outcome = gen_outcome(data.covariates, data.genotypes, config, outcome_stream);
  data.y = std::move(outcome.y);
  out.clamps = outcome.clamped;
  data.snp_names = config.profile.snps;
  for (Index j = 0; j < data.covariates.cols(); ++j) data.covariate_names.push_back("X" + std::to_string(j + 1));
  for (Index i = 0; i < config.n; ++i) data.ids.push_back("s" + std::to_string(i + 1));
  return out;
}

struct ReplicateRow {
  std::array<double, kStudyTestCount> p;
  Index clamps = 0;
};

std::array<bool, kStudyTestCount> roster_mask(const SimConfig& config) {
  std::array<bool, kStudyTestCount> mask{};
  if (config.tests.empty()) {
    mask.fill(true);
    return mask;
  }
  const auto& names = study_test_names();
  for (const auto& t : config.tests) {
    bool found = false;
    for (int k = 0; k < kStudyTestCount; ++k) {
      if (names[static_cast<std::size_t>(k)] == t) {
        mask[static_cast<std::size_t>(k)] = true;
        found = true;
      }
    }
    if (!found) config_error("config.tests", "unknown test '" + t + "'");
  }
  return mask;
}

ReplicateRow run_replicate(const SimConfig& config, const std::array<bool, kStudyTestCount>& mask, int r) {
  ReplicateRow row;
  row.p.fill(std::numeric_limits<double>::quiet_NaN());
  const auto replicate = static_cast<std::uint64_t>(r);

  Generated generated = generate(config, replicate);
  row.clamps = generated.clamps;
  Dataset& data = generated.data;
  // Monomorphic SNPs can occur for rare alleles at small n; they carry no
  // information and would make the design singular.
  std::vector<Index> polymorphic;
  for (Index j = 0; j < data.p(); ++j) {
    if ((data.genotypes.col(j).array() != data.genotypes(0, j)).any()) polymorphic.push_back(j);
  }
  if (static_cast<Index>(polymorphic.size()) < data.p()) {
    std::vector<std::string> names;
    for (Index j : polymorphic) names.push_back(data.snp_names[static_cast<std::size_t>(j)]);
    data.genotypes = select_columns(data.genotypes, polymorphic);
    data.snp_names = std::move(names);
  }
  if (data.p() == 0) return row;

  const bool want_vc = mask[0] || mask[1] || mask[2] || mask[3] || mask[4];
  if (want_vc) {
    try {
      TestOptions options;
      options.perturb.replicates = config.resamples;
      options.perturb.seed = derive_seed(config.seed, {static_cast<std::uint64_t>(StreamPurpose::resampling), replicate});
      const TestReport report = run_vc_test(data, options);
      const std::array<double, 5> vc{report.p_pi, report.p_lambda, report.p_min, report.p_fisher, report.p_std};
      for (int k = 0; k < 5; ++k) {
        if (mask[static_cast<std::size_t>(k)]) row.p[static_cast<std::size_t>(k)] = vc[static_cast<std::size_t>(k)];
      }
    } catch (const std::runtime_error&) {
    }
  }
  if (mask[5] || mask[6] || mask[7]) {
    try {
      const auto wald = wald_zip_all(data);
      for (int k = 0; k < 3; ++k) {
        if (mask[static_cast<std::size_t>(5 + k)]) row.p[static_cast<std::size_t>(5 + k)] = wald[static_cast<std::size_t>(k)].p_value;
      }
    } catch (const std::runtime_error&) {
    }
  }
  if (mask[8]) {
    try {
      row.p[8] = wald_poisson_hw(data).p_value;
    } catch (const std::runtime_error&) {
    }
  }
  return row;
}

StudyResult summarize(const SimConfig& config, const std::array<bool, kStudyTestCount>& mask,
                      const std::vector<ReplicateRow>& rows) {
  StudyResult result;
  result.setting = config.setting;
  result.pvalues.resize(config.replicates, kStudyTestCount);
  for (int r = 0; r < config.replicates; ++r) {
    const ReplicateRow& row = rows[static_cast<std::size_t>(r)];
    result.outcome_clamps += row.clamps;
    for (int k = 0; k < kStudyTestCount; ++k) result.pvalues(r, k) = row.p[static_cast<std::size_t>(k)];
  }
  const auto& names = study_test_names();
  for (int k = 0; k < kStudyTestCount; ++k) {
    if (!mask[static_cast<std::size_t>(k)]) continue;
    TestSummary s;
    s.test = names[static_cast<std::size_t>(k)];
    for (int r = 0; r < config.replicates; ++r) {
      const double p = result.pvalues(r, k);
      if (std::isnan(p)) {
        ++s.failures;
        continue;
      }
      ++s.replicates;
      s.rejections += p <= config.alpha ? 1 : 0;
    }
    if (s.failures > kMaxFailureFraction * config.replicates) {
      throw NumericalError("simulation '" + config.setting + "': test " + s.test + " failed in " +
                           std::to_string(s.failures) + " of " + std::to_string(config.replicates) +
                           " replicates (more than 5%)");
    }
    if (s.replicates > 0) {
      s.rate = static_cast<double>(s.rejections) / s.replicates;
      s.se = std::sqrt(s.rate * (1.0 - s.rate) / s.replicates);
    }
    result.summaries.push_back(s);
  }
  return result;
}

void check_config(const SimConfig& config) {
  if (config.n < 10) config_error("config.n", "must be at least 10");
  if (config.replicates < 1) config_error("config.replicates", "must be positive");
  if (config.resamples < 100) config_error("config.B", "must be at least 100");
  if (!config.include_covariates && config.rho_xg != 0.0) {
    config_error("config.rho_xg", "covariate dependence requires include_covariates");
  }
  validate_profile(config.profile, "config.profile");
  correlation_factor(config.profile);
}

}  // namespace

MatrixXd SimConfig::default_dependence() {
  MatrixXd printed(3, 5);
  printed << 0.08, 0.5, 0.0, 0.5, 0.8,
             0.09, 0.4, 0.1, 0.0, 0.0,
             0.0, 0.0, 0.3, 0.6, 0.9;
  return printed.transpose();
}

const std::array<std::string, kStudyTestCount>& study_test_names() {
  static const std::array<std::string, kStudyTestCount> names{
      "vc_pi", "vc_lambda", "vc_min", "vc_fisher", "vc_std",
      "wald_zip_pi", "wald_zip_lambda", "wald_zip_joint", "wald_poisson_hw"};
  return names;
}

GenotypeProfile profile_from_json(const json& doc, const std::string& where) {
  if (!doc.is_object()) config_error(where, "expected an object");
  GenotypeProfile profile;
  profile.name = doc.value("name", std::string("profile"));
  profile.maf = get_vector(doc, "maf", where, VectorXd());
  const Index p = profile.maf.size();
  if (doc.contains("snps")) {
    for (const auto& s : doc.at("snps")) {
      if (!s.is_string()) config_error(where + ".snps", "expected strings");
      profile.snps.push_back(s.get<std::string>());
    }
  } else {
    for (Index j = 0; j < p; ++j) profile.snps.push_back("snp" + std::to_string(j + 1));
  }
  if (!doc.contains("ld")) config_error(where + ".ld", "missing");
  profile.ld = get_matrix(doc, "ld", where, p, p);
  if (!doc.contains("causal") || !doc.at("causal").is_array()) config_error(where + ".causal", "expected an array");
  for (const auto& c : doc.at("causal")) {
    if (!c.is_number_integer()) config_error(where + ".causal", "expected integer indices");
    profile.causal.push_back(c.get<Index>());
  }
  if (doc.contains("repair")) {
    if (!doc.at("repair").is_boolean()) config_error(where + ".repair", "expected a boolean");
    profile.repair = doc.at("repair").get<bool>();
  }
  validate_profile(profile, where);
  return profile;
}

SimConfig sim_config_from_json(const json& doc, const std::filesystem::path& base_dir) {
  const std::string where = "config";
  if (!doc.is_object()) config_error(where, "expected an object");
  static const std::vector<std::string> known{
      "setting", "n", "replicates", "B", "seed", "profile", "include_covariates", "alpha_pi", "alpha_lambda",
      "beta_pi", "beta_lambda", "gamma_pi", "gamma_lambda", "rho_xg", "dependence_matrix", "overdispersion_sd",
      "mode", "alpha", "tests", "notes"};
  for (const auto& item : doc.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      config_error(where + "." + item.key(), "unknown key");
    }
  }
  SimConfig config;
  if (doc.contains("setting")) {
    if (!doc.at("setting").is_string()) config_error(where + ".setting", "expected a string");
    config.setting = doc.at("setting").get<std::string>();
  }
  auto get_int = [&](const std::string& key, long long fallback) -> long long {
    if (!doc.contains(key)) return fallback;
    if (!doc.at(key).is_number_integer()) config_error(where + "." + key, "expected an integer");
    return doc.at(key).get<long long>();
  };
  config.n = static_cast<Index>(get_int("n", config.n));
  config.replicates = static_cast<int>(get_int("replicates", config.replicates));
  config.resamples = static_cast<int>(get_int("B", config.resamples));
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned() && !doc.at("seed").is_number_integer()) {
      config_error(where + ".seed", "expected a non-negative integer");
    }
    config.seed = doc.at("seed").get<std::uint64_t>();
  }
  if (!doc.contains("profile")) config_error(where + ".profile", "missing");
  const auto& profile = doc.at("profile");
  if (profile.is_string()) {
    const std::filesystem::path file = base_dir / profile.get<std::string>();
    std::ifstream in(file);
    if (!in) config_error(where + ".profile", "cannot open " + file.string());
    json profile_doc;
    try {
      profile_doc = json::parse(in);
    } catch (const json::parse_error& e) {
      config_error(where + ".profile", std::string("malformed JSON in ") + file.string() + ": " + e.what());
    }
    config.profile = profile_from_json(profile_doc, where + ".profile");
  } else {
    config.profile = profile_from_json(profile, where + ".profile");
  }
  if (doc.contains("include_covariates")) {
    if (!doc.at("include_covariates").is_boolean()) config_error(where + ".include_covariates", "expected a boolean");
    config.include_covariates = doc.at("include_covariates").get<bool>();
  }
  config.alpha_pi = get_number(doc, "alpha_pi", where, config.alpha_pi);
  config.alpha_lambda = get_number(doc, "alpha_lambda", where, config.alpha_lambda);
  config.beta_pi = get_vector(doc, "beta_pi", where, config.beta_pi, 5);
  config.beta_lambda = get_vector(doc, "beta_lambda", where, config.beta_lambda, 5);
  config.gamma_pi = get_vector(doc, "gamma_pi", where, config.gamma_pi, 3);
  config.gamma_lambda = get_vector(doc, "gamma_lambda", where, config.gamma_lambda, 3);
  config.rho_xg = get_number(doc, "rho_xg", where, config.rho_xg);
  if (doc.contains("dependence_matrix")) config.dependence = get_matrix(doc, "dependence_matrix", where, 5, 3);
  config.overdispersion_sd = get_number(doc, "overdispersion_sd", where, config.overdispersion_sd);
  if (config.overdispersion_sd < 0.0) config_error(where + ".overdispersion_sd", "must be non-negative");
  if (doc.contains("mode")) {
    const auto& m = doc.at("mode");
    const std::string name = m.is_string() ? m.get<std::string>() : std::string();
    if (name == "null") config.mode = AlternativeMode::null;
    else if (name == "both") config.mode = AlternativeMode::both;
    else if (name == "pi_only") config.mode = AlternativeMode::pi_only;
    else if (name == "lambda_only") config.mode = AlternativeMode::lambda_only;
    else config_error(where + ".mode", "expected one of null, both, pi_only, lambda_only");
  }
  config.alpha = get_number(doc, "alpha", where, config.alpha);
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) config_error(where + ".alpha", "must lie in (0, 1)");
  if (doc.contains("tests")) {
    if (!doc.at("tests").is_array()) config_error(where + ".tests", "expected an array of test names");
    for (const auto& t : doc.at("tests")) {
      if (!t.is_string()) config_error(where + ".tests", "expected test names");
      config.tests.push_back(t.get<std::string>());
    }
    roster_mask(config);
  }
  check_config(config);
  return config;
}

SimConfig load_sim_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("malformed JSON in " + path.string() + ": " + e.what());
  }
  return sim_config_from_json(doc, path.parent_path());
}

json to_json(const GenotypeProfile& profile) {
  json doc;
  doc["name"] = profile.name;
  doc["snps"] = profile.snps;
  doc["maf"] = vector_json(profile.maf);
  doc["ld"] = matrix_json(profile.ld);
  doc["causal"] = profile.causal;
  doc["repair"] = profile.repair;
  return doc;
}

json to_json(const SimConfig& config) {
  json doc;
  doc["setting"] = config.setting;
  doc["n"] = config.n;
  doc["replicates"] = config.replicates;
  doc["B"] = config.resamples;
  doc["seed"] = config.seed;
  doc["profile"] = to_json(config.profile);
  doc["include_covariates"] = config.include_covariates;
  doc["alpha_pi"] = config.alpha_pi;
  doc["alpha_lambda"] = config.alpha_lambda;
  doc["beta_pi"] = vector_json(config.beta_pi);
  doc["beta_lambda"] = vector_json(config.beta_lambda);
  doc["gamma_pi"] = vector_json(config.gamma_pi);
  doc["gamma_lambda"] = vector_json(config.gamma_lambda);
  doc["rho_xg"] = config.rho_xg;
  doc["dependence_matrix"] = matrix_json(config.dependence);
  doc["overdispersion_sd"] = config.overdispersion_sd;
  doc["mode"] = mode_name(config.mode);
  doc["alpha"] = config.alpha;
  doc["tests"] = config.tests;
  return doc;
}

MatrixXd gen_covariates(Index n, Stream& stream) {
  MatrixXd x(n, 5);
  for (Index i = 0; i < n; ++i) {
    const double x1 = stream.binomial(2, 0.5);
    const double w2 = stream.binomial(2, 0.5);
    const double x2 = 0.5 * w2 + stream.normal(0.0, 0.5);
    const double x3 = 0.1 * x1 * x2 + stream.normal(0.0, 0.5);
    const double w4 = stream.binomial(2, 0.4);
    const double x4 = 0.1 * w4 - 0.2 * x2 + 0.2 * x3 + stream.normal(0.0, 0.5);
    const double w5 = stream.binomial(2, 0.4);
    const double x5 = 0.5 * w5 + 0.15 * x2 + 0.2 * x3 + stream.normal(0.0, 0.5);
    x.row(i) << x1, x2, x3, x4, x5;
  }
  return x;
}

MatrixXd gen_genotypes(Index n, const GenotypeProfile& profile, Stream& stream) {
  const Index p = profile.maf.size();
  const MatrixXd factor = correlation_factor(profile);
  VectorXd cut(p);
  const boost::math::normal_distribution<double> standard;
  for (Index j = 0; j < p; ++j) cut(j) = boost::math::quantile(standard, profile.maf(j));
  MatrixXd g = MatrixXd::Zero(n, p);
  VectorXd e(p);
  for (Index i = 0; i < n; ++i) {
    for (int hap = 0; hap < 2; ++hap) {
      for (Index j = 0; j < p; ++j) e(j) = stream.normal();
      const VectorXd z = factor * e;
      for (Index j = 0; j < p; ++j) g(i, j) += z(j) < cut(j) ? 1.0 : 0.0;
    }
  }
  return g;
}

OutcomeDraw gen_outcome(const MatrixXd& covariates, const MatrixXd& genotypes, const SimConfig& config,
                        Stream& stream) {
  const Index n = genotypes.rows();
  if (covariates.rows() != n) throw InputError("gen_outcome: covariate and genotype rows differ");
  if (config.include_covariates && covariates.cols() != 5) throw InputError("gen_outcome: expected 5 covariates");
  MatrixXd causal(n, 3);
  for (Index c = 0; c < 3; ++c) causal.col(c) = genotypes.col(config.profile.causal[static_cast<std::size_t>(c)]);

  VectorXd eta_pi = VectorXd::Constant(n, config.alpha_pi);
  VectorXd eta_lambda = VectorXd::Constant(n, config.alpha_lambda);
  if (config.include_covariates) {
    eta_pi += covariates * config.beta_pi;
    eta_lambda += covariates * config.beta_lambda;
  }
  const bool signal_pi = config.mode == AlternativeMode::both || config.mode == AlternativeMode::pi_only;
  const bool signal_lambda = config.mode == AlternativeMode::both || config.mode == AlternativeMode::lambda_only;
  if (signal_pi) eta_pi += causal * config.gamma_pi;
  if (signal_lambda) eta_lambda += causal * config.gamma_lambda;

  OutcomeDraw out;
  out.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    double log_lambda = eta_lambda(i) + config.overdispersion_sd * stream.normal();
    if (log_lambda > kMaxLogLambda) {
      log_lambda = kMaxLogLambda;
      ++out.clamped;
    }
    const double pi = 1.0 / (1.0 + std::exp(-eta_pi(i)));
    const bool susceptible = stream.bernoulli(pi);
    out.y(i) = susceptible ? static_cast<double>(stream.poisson(std::exp(log_lambda))) : 0.0;
  }
  return out;
}

MatrixXd apply_dependence(const MatrixXd& covariates, const MatrixXd& genotypes, const SimConfig& config) {
  if (config.rho_xg == 0.0 || covariates.cols() == 0) return covariates;
  MatrixXd causal(genotypes.rows(), 3);
  for (Index c = 0; c < 3; ++c) causal.col(c) = genotypes.col(config.profile.causal[static_cast<std::size_t>(c)]);
  return covariates + config.rho_xg * causal * config.dependence.transpose();
}

Dataset simulate_dataset(const SimConfig& config, std::uint64_t replicate) { return generate(config, replicate).data; }

StudyResult run_study(const SimConfig& config) {
  check_config(config);
  const auto mask = roster_mask(config);
  std::vector<ReplicateRow> rows(static_cast<std::size_t>(config.replicates));
  std::vector<std::exception_ptr> errors(rows.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (int r = 0; r < config.replicates; ++r) {
    try {
      rows[static_cast<std::size_t>(r)] = run_replicate(config, mask, r);
    } catch (...) {
      errors[static_cast<std::size_t>(r)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return summarize(config, mask, rows);
}

namespace reference {

StudyResult run_study(const SimConfig& config) {
  check_config(config);
  const auto mask = roster_mask(config);
  std::vector<ReplicateRow> rows(static_cast<std::size_t>(config.replicates));
  for (int r = 0; r < config.replicates; ++r) rows[static_cast<std::size_t>(r)] = run_replicate(config, mask, r);
  return summarize(config, mask, rows);
}

}  // namespace reference

std::string study_tsv(const StudyResult& result) {
  std::ostringstream out;
  out << "setting\ttest\treplicates\trejections\trate\tse\n";
  char rate[32], se[32];
  for (const auto& s : result.summaries) {
    std::snprintf(rate, sizeof(rate), "%.6f", s.rate);
    std::snprintf(se, sizeof(se), "%.6f", s.se);
    out << result.setting << '\t' << s.test << '\t' << s.replicates << '\t' << s.rejections << '\t' << rate << '\t'
        << se << '\n';
  }
  return out.str();
}

}  // namespace zipvc
