// Serial reference versus OpenMP kernels. Run with OMP_NUM_THREADS set to
// the thread count of interest.

#include "zipvc/omnibus.hpp"
#include "zipvc/resampling.hpp"
#include "zipvc/score.hpp"
#include "zipvc/simulator.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace zipvc;

SimConfig bench_config(Index n) {
  SimConfig config;
  config.n = n;
  config.seed = 11;
  GenotypeProfile& profile = config.profile;
  profile.name = "bench";
  profile.maf = (VectorXd(6) << 0.3, 0.25, 0.2, 0.35, 0.15, 0.4).finished();
  profile.ld = MatrixXd::Identity(6, 6);
  for (Index i = 0; i < 6; ++i) {
    for (Index j = 0; j < 6; ++j) profile.ld(i, j) = std::pow(0.4, std::abs(static_cast<double>(i - j)));
  }
  for (Index j = 0; j < 6; ++j) profile.snps.push_back("snp" + std::to_string(j + 1));
  profile.causal = {0, 2, 4};
  return config;
}

struct Fixture {
  Dataset data;
  NullFit fit;
  Basis basis;
  PerturbConfig perturb;

  explicit Fixture(Index n) : data(simulate_dataset(bench_config(n), 0)) {
    fit = fit_null(data, FitConfig{});
    basis = build_basis(data.genotypes, BasisSpec{});
    perturb.replicates = 200;
    perturb.seed = 3;
  }
};

const Fixture& fixture() {
  static const Fixture f(500);
  return f;
}

void BM_PerturbSerial(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(reference::perturb(f.data, f.basis, f.fit, f.perturb));
}

void BM_PerturbParallel(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(perturb(f.data, f.basis, f.fit, f.perturb));
}

void BM_KernelSerial(benchmark::State& state) {
  const auto& f = fixture();
  const KernelSpec kernel{KernelKind::gaussian, 1.5};
  for (auto _ : state) benchmark::DoNotOptimize(reference::kernel_matrix(f.data.genotypes, kernel));
}

void BM_KernelParallel(benchmark::State& state) {
  const auto& f = fixture();
  const KernelSpec kernel{KernelKind::gaussian, 1.5};
  for (auto _ : state) benchmark::DoNotOptimize(kernel_matrix(f.data.genotypes, kernel));
}

struct DrawFixture {
  PerturbationSet draws;
  MarginalPValues marginal;

  DrawFixture() {
    const auto& f = fixture();
    draws = perturb(f.data, f.basis, f.fit, f.perturb);
    marginal = marginal_pvalues(score_statistics(f.fit, f.data, f.basis), draws);
  }
};

const DrawFixture& draw_fixture() {
  static const DrawFixture d;
  return d;
}

void BM_DrawPValuesSerial(benchmark::State& state) {
  const auto& d = draw_fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(reference::draw_pvalues(d.draws, d.marginal.mixture_pi, d.marginal.mixture_lambda));
  }
}

void BM_DrawPValuesParallel(benchmark::State& state) {
  const auto& d = draw_fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(draw_pvalues(d.draws, d.marginal.mixture_pi, d.marginal.mixture_lambda));
  }
}

}  // namespace

BENCHMARK(BM_PerturbSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PerturbParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KernelSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KernelParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DrawPValuesSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DrawPValuesParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
