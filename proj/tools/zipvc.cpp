// zipvc: variance-component score tests for zero-inflated count outcomes.
//
// Exit codes: 0 ok, 2 numerical or convergence failure, 3 input or schema
// error, 4 internal error.

#include "zipvc/dataset.hpp"
#include "zipvc/errors.hpp"
#include "zipvc/omnibus.hpp"
#include "zipvc/report.hpp"
#include "zipvc/simulator.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

namespace {

using json = nlohmann::ordered_json;
using namespace zipvc;

constexpr int kExitOk = 0;
constexpr int kExitNumerical = 2;
constexpr int kExitInput = 3;
constexpr int kExitInternal = 4;

struct TestArgs {
  std::string pheno, geno, covar, kernel = "linear", out;
  double rank_frac = 0.999;
  std::optional<int> rank;
  bool center = false;
  int resamples = 1000;
  std::uint64_t seed = 1;
  bool impute = false;
};

struct SimulateArgs {
  std::string config, out;
  std::optional<int> replicates;
  std::optional<int> resamples;
};

struct PruneArgs {
  std::string geno, out, report;
  double threshold = 0.99;
};

struct GenerateArgs {
  std::string config, pheno, geno, covar;
  std::uint64_t replicate = 0;
};

void apply_threads(int requested) {
  int threads = requested;
  if (const char* env = std::getenv("ZIPVC_THREADS"); env && *env) {
    try {
      threads = std::stoi(env);
    } catch (const std::exception&) {
      throw InputError(std::string("ZIPVC_THREADS must be a positive integer, got '") + env + "'");
    }
  }
  if (threads < 0) throw InputError("thread count must be positive");
  if (threads > 0) omp_set_num_threads(threads);
}

// Embedded paths are recorded as given; digests identify the content.
int cmd_test(const TestArgs& args) {
  const auto start = std::chrono::steady_clock::now();
  LoadPolicy policy;
  policy.missing = args.impute ? MissingPolicy::mean_impute : MissingPolicy::listwise;
  const Dataset data = load_dataset(args.pheno, args.geno, args.covar, policy);

  TestOptions options;
  options.basis = BasisSpec::parse(args.kernel);
  options.basis.rank_fraction = args.rank_frac;
  if (args.rank) options.basis.rank = *args.rank;
  options.basis.center = args.center;
  options.perturb.replicates = args.resamples;
  options.perturb.seed = args.seed;
  const TestReport report = run_vc_test(data, options);

  RunManifest manifest;
  manifest.command = "test";
  manifest.seed = args.seed;
  manifest.options = json{{"pheno", args.pheno},
                          {"geno", args.geno},
                          {"covar", args.covar},
                          {"kernel", options.basis.describe()},
                          {"rank_frac", args.rank_frac},
                          {"rank", args.rank ? json(*args.rank) : json(nullptr)},
                          {"center", args.center},
                          {"resamples", args.resamples},
                          {"seed", args.seed},
                          {"missing", args.impute ? "mean_impute" : "listwise"}};
  manifest.inputs.push_back(digest_input(args.pheno));
  manifest.inputs.push_back(digest_input(args.geno));
  if (!args.covar.empty()) manifest.inputs.push_back(digest_input(args.covar));
  write_json(args.out, to_json(report, manifest));
  std::cout << pvalue_line(report) << '\n';
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  std::cerr << "wall time " << elapsed.count() << " s\n";
  return kExitOk;
}

int cmd_simulate(const SimulateArgs& args, int threads) {
  const auto start = std::chrono::steady_clock::now();
  SimConfig config = load_sim_config(args.config);
  if (args.replicates) config.replicates = *args.replicates;
  if (args.resamples) config.resamples = *args.resamples;
  const StudyResult result = run_study(config);
  write_text(args.out, study_tsv(result));

  RunManifest manifest;
  manifest.command = "simulate";
  manifest.seed = config.seed;
  manifest.options = json{{"config", args.config}, {"resolved", to_json(config)}};
  manifest.inputs.push_back(digest_input(args.config));
  json doc = to_json(manifest);
  doc["output"] = json{{"file", std::filesystem::path(args.out).filename().string()},
                       {"sha256", sha256_file(args.out)}};
  doc["outcome_clamps"] = result.outcome_clamps;
  doc["threads"] = threads > 0 ? threads : omp_get_max_threads();
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  doc["wall_time_seconds"] = elapsed.count();
  write_json(args.out + ".manifest.json", doc);
  return kExitOk;
}

int cmd_prune(const PruneArgs& args) {
  const GenotypeTable data = load_genotypes(args.geno);
  const PruneReport report = ld_prune(data.genotypes, args.threshold, data.snp_names);
  std::vector<std::string> kept_names;
  for (Index j : report.kept) kept_names.push_back(data.snp_names[static_cast<std::size_t>(j)]);
  write_genotype_csv(args.out, data.ids, kept_names, select_columns(data.genotypes, report.kept));

  RunManifest manifest;
  manifest.command = "prune";
  manifest.options = json{{"geno", args.geno}, {"threshold", args.threshold}};
  manifest.inputs.push_back(digest_input(args.geno));
  write_json(args.report, to_json(report, data.snp_names, manifest));
  return kExitOk;
}

int cmd_generate(const GenerateArgs& args) {
  const SimConfig config = load_sim_config(args.config);
  const Dataset data = simulate_dataset(config, args.replicate);
  write_dataset(data, args.pheno, args.geno, args.covar);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variance-component score tests for zero-inflated count outcomes"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (ZIPVC_THREADS overrides)")->check(CLI::NonNegativeNumber);

  TestArgs test;
  auto* sub_test = app.add_subcommand("test", "Run the variance-component tests on one SNP set");
  sub_test->add_option("--pheno", test.pheno, "phenotype CSV (id,y)")->required()->check(CLI::ExistingFile);
  sub_test->add_option("--geno", test.geno, "genotype CSV (id,snp...)")->required()->check(CLI::ExistingFile);
  sub_test->add_option("--covar", test.covar, "covariate CSV (id,x...)")->check(CLI::ExistingFile);
  sub_test->add_option("--kernel", test.kernel, "linear | kpca:linear | kpca:gaussian:SIGMA | kpca:poly:D")
      ->capture_default_str();
  sub_test->add_option("--rank-frac", test.rank_frac, "kernel PCA variance fraction")->capture_default_str();
  sub_test->add_option("--rank", test.rank, "fixed kernel PCA rank");
  sub_test->add_flag("--center", test.center, "double-centre the kernel matrix");
  sub_test->add_option("--resamples", test.resamples, "perturbation resamples B")->capture_default_str();
  sub_test->add_option("--seed", test.seed, "resampling seed")->capture_default_str();
  sub_test->add_flag("--impute", test.impute, "mean-impute missing genotype cells");
  sub_test->add_option("--out", test.out, "report JSON")->required();
  sub_test->add_option("--threads", threads, "worker threads (ZIPVC_THREADS overrides)");

  SimulateArgs sim;
  auto* sub_sim = app.add_subcommand("simulate", "Run a Monte Carlo size or power study");
  sub_sim->add_option("--config", sim.config, "study configuration JSON")->required()->check(CLI::ExistingFile);
  sub_sim->add_option("--replicates", sim.replicates, "override the configured replicate count");
  sub_sim->add_option("--resamples", sim.resamples, "override the configured B");
  sub_sim->add_option("--out", sim.out, "results TSV")->required();
  sub_sim->add_option("--threads", threads, "worker threads (ZIPVC_THREADS overrides)");

  PruneArgs prune;
  auto* sub_prune = app.add_subcommand("prune", "Drop SNPs in near-perfect LD with an earlier SNP");
  sub_prune->add_option("--geno", prune.geno, "genotype CSV")->required()->check(CLI::ExistingFile);
  sub_prune->add_option("--threshold", prune.threshold, "absolute correlation threshold")->capture_default_str();
  sub_prune->add_option("--out", prune.out, "pruned genotype CSV")->required();
  sub_prune->add_option("--report", prune.report, "prune report JSON")->required();

  GenerateArgs gen;
  auto* sub_gen = app.add_subcommand("generate", "Write one simulated data set as CSV files");
  sub_gen->add_option("--config", gen.config, "study configuration JSON")->required()->check(CLI::ExistingFile);
  sub_gen->add_option("--replicate", gen.replicate, "replicate index")->capture_default_str();
  sub_gen->add_option("--pheno", gen.pheno, "phenotype CSV")->required();
  sub_gen->add_option("--geno", gen.geno, "genotype CSV")->required();
  sub_gen->add_option("--covar", gen.covar, "covariate CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    std::cerr << (subs.empty() ? app.help() : subs.front()->help());
    return kExitInput;
  }

  try {
    apply_threads(threads);
    if (*sub_test) return cmd_test(test);
    if (*sub_sim) return cmd_simulate(sim, threads);
    if (*sub_prune) return cmd_prune(prune);
    if (*sub_gen) return cmd_generate(gen);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}
