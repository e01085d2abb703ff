#include "zipvc/rng.hpp"

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace zipvc {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> key) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t k : key) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

Stream::Stream(std::uint64_t seed, std::initializer_list<std::uint64_t> key)
    : engine_(derive_seed(seed, key)) {}

double Stream::uniform() {
  // 53 random bits, shifted off zero.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Stream::normal(double mean, double sd) {
  boost::random::normal_distribution<double> dist(mean, sd);
  return dist(engine_);
}

double Stream::exponential(double rate) {
  boost::random::exponential_distribution<double> dist(rate);
  return dist(engine_);
}

int Stream::binomial(int trials, double p) {
  int k = 0;
  for (int t = 0; t < trials; ++t) k += bernoulli(p) ? 1 : 0;
  return k;
}

bool Stream::bernoulli(double p) { return uniform() < p; }

long Stream::poisson(double mean) {
  if (mean <= 0.0) return 0;
  boost::random::poisson_distribution<long, double> dist(mean);
  return dist(engine_);
}

}  // namespace zipvc
