#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace zipvc {

/// Mixes a seed and a key path into a single 64-bit stream seed (splitmix64 chain).
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> key);

/// Purpose tags keep streams for different jobs disjoint under the same key.
enum class StreamPurpose : std::uint64_t {
  weights = 1,
  covariates = 2,
  genotypes = 3,
  outcome = 4,
  resampling = 5,
  test_data = 6,
};

/// A random stream keyed by (seed, key...). Streams with distinct keys are
/// independent for practical purposes, and the draws are identical across
/// platforms: the engine output is fixed by the standard and the
/// distributions come from Boost.Random rather than the unspecified <random>
/// ones.
class Stream {
 public:
  Stream(std::uint64_t seed, std::initializer_list<std::uint64_t> key);

  double uniform();  // open interval (0, 1)
  double normal(double mean = 0.0, double sd = 1.0);
  double exponential(double rate = 1.0);
  int binomial(int trials, double p);
  bool bernoulli(double p);
  long poisson(double mean);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace zipvc
