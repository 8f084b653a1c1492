#pragma once

// Zeroth-order estimation of dL_G/dx for the generator objective.
//
// Clients only return logits, so the server probes the batch-mean generator
// loss at x and at q jointly perturbed batches x + eps * u_i and forms
//
//   g(x) = (1/q) sum_i d * (L(x + eps u_i) - L(x)) / eps * u_i
//
// with d the per-sample dimensionality. For Gaussian directions the
// expectation of g on a linear loss is d times the true gradient. The
// estimate is pushed through the generator by ordinary backprop.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fedzge/adam.hpp"
#include "fedzge/network.hpp"
#include "fedzge/objectives.hpp"
#include "fedzge/rng.hpp"

namespace fedzge {

enum class PerturbationMode {
  gaussian,  // entries i.i.d. N(0, 1)
  sphere,    // each row rescaled to norm sqrt(d)
};

struct ZOConfig {
  std::size_t directions = 10;  // q
  double smoothing = 1e-3;      // eps
  PerturbationMode mode = PerturbationMode::gaussian;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PerturbedBatchSet {
  Tensor base;
  std::vector<Tensor> directions;
  std::vector<Tensor> perturbed;  // base + eps * directions[i]
};

std::vector<Tensor> sample_perturbations(std::size_t batch, std::size_t dim, const ZOConfig& cfg, Rng& rng);

PerturbedBatchSet make_perturbed_set(const Tensor& base, const ZOConfig& cfg, Rng& rng);

struct GeneratorLossEval {
  GeneratorLossParts parts;
  double total = 0.0;
};

/// Full generator loss at `x` from logits already computed at exactly `x`.
/// Masked terms are not evaluated and reported as zero.
GeneratorLossEval fd_loss_at(const Tensor& x, const Tensor& noise, std::span<const int> labels,
                             const Tensor& ensemble_logits, const Tensor& global_logits, const LossWeights& weights,
                             const LossMask& mask);

/// Finite-difference estimate of dL/dx with shape (B, d).
Tensor zo_input_grad(double base_loss, std::span<const double> perturbed_losses, std::span<const Tensor> directions,
                     const ZOConfig& cfg);

/// Backprop `input_grad` through the generator's cached forward pass and
/// return the parameter gradient.
std::vector<double> chain_to_generator(Network& generator, const Tensor& input_grad);

/// Exact dL_G/dx by reverse mode through the local models, the global model
/// and the diversity term. Needs the local models themselves, which only
/// white-box clients hand out.
Tensor true_input_grad(std::span<Network> local_models, const EnsembleWeights& weights, Network& global_model,
                       const Tensor& x, const Tensor& noise, std::span<const int> labels,
                       const LossWeights& loss_weights, const LossMask& mask);

void generator_step(Network& generator, std::span<const double> param_grads, AdamState& state, double learning_rate);

}  // namespace fedzge
