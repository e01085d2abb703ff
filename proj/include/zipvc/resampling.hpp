#pragma once

#include "zipvc/dataset.hpp"
#include "zipvc/score.hpp"
#include "zipvc/zip_model.hpp"

#include <cstdint>

namespace zipvc {

enum class WeightScheme {
  exponential,  // V_i ~ Exponential(1)
  unit,         // V_i = 1; test hook, every draw reproduces the observed score
};

struct PerturbConfig {
  int replicates = 1000;  // B
  std::uint64_t seed = 1;
  WeightScheme scheme = WeightScheme::exponential;
  FitConfig fit;          // tolerances for the weighted refits
  int max_attempts = 10;  // fresh weight draws per replicate before giving up
  double max_failure_fraction = 0.01;
};

/// Centered perturbed scores sqrt(n)(S^(b) - S), stacked (pi block, lambda block).
struct PerturbationSet {
  MatrixXd b_draws;    // B x 2K
  MatrixXd q_draws;    // B x 2: Q_pi^(b), Q_lambda^(b)
  MatrixXd sigma_hat;  // 2K x 2K sample covariance of b_draws
  std::uint64_t seed = 0;
  int replicates = 0;
  int refit_failures = 0;

  Index k() const { return b_draws.cols() / 2; }
  MatrixXd block(int a, int b) const { return sigma_hat.block(a * k(), b * k(), k(), k()); }
  MatrixXd sigma_pi() const { return block(0, 0); }
  MatrixXd sigma_lambda() const { return block(1, 1); }
};

/// n i.i.d. Exponential(1) weights from the stream keyed by (seed, replicate, attempt).
VectorXd draw_weights(Index n, std::uint64_t seed, std::uint64_t replicate, std::uint64_t attempt = 0);

/// Perturbation resampling: each replicate refits the null model with random
/// weights and records the centered perturbed score. Replicates run in
/// parallel; output is independent of the thread count.
PerturbationSet perturb(const Dataset& data, const Basis& basis, const NullFit& null_fit,
                        const PerturbConfig& config);

/// Sample covariance (divisor B - 1) of the rows of `draws`.
MatrixXd sample_covariance(const MatrixXd& draws);

namespace reference {
/// Serial replicate loop; bitwise identical to zipvc::perturb.
PerturbationSet perturb(const Dataset& data, const Basis& basis, const NullFit& null_fit,
                        const PerturbConfig& config);
}  // namespace reference

}  // namespace zipvc
