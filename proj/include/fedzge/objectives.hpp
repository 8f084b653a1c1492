#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fedzge/tensor.hpp"

namespace fedzge {

/// Sample-size weights N_k / N over the participating clients.
struct EnsembleWeights {
  std::vector<double> values;

  static EnsembleWeights from_sample_counts(std::span<const std::size_t> counts);
  std::size_t size() const { return values.size(); }
};

struct LossWeights {
  double adversarial = 1.0;  // beta_1
  double diversity = 1.0;    // beta_2
  double information = 1.0;  // beta_3
  double temperature = 5.0;  // tau
  /// Multiply every distillation KL by tau^2 (off by default).
  bool temperature_squared = false;
};

/// Which generator-loss terms are active.
struct LossMask {
  bool fidelity = true;
  bool adversarial = true;
  bool diversity = true;
  bool information = true;

  static LossMask fidelity_only() { return {true, false, false, false}; }
};

struct GeneratorLossParts {
  double fidelity = 0.0;
  double adversarial = 0.0;
  double diversity = 0.0;
  double information = 0.0;
};

/// Weighted sum of client logits, accumulated in ascending client order.
Tensor ensemble(std::span<const Tensor> local_logits, const EnsembleWeights& weights);

/// CE(ensemble logits, random labels).
double fidelity_loss(const Tensor& ensemble_logits, std::span<const int> labels);

/// KL(softmax(ens / tau) || softmax(global / tau)).
double global_distill_loss(const Tensor& ensemble_logits, const Tensor& global_logits, double tau,
                           bool temperature_squared = false);

/// Exactly -global_distill_loss.
double adversarial_loss(const Tensor& ensemble_logits, const Tensor& global_logits, double tau,
                        bool temperature_squared = false);

/// Same form as global_distill_loss with a local model as the student.
double local_distill_loss(const Tensor& ensemble_logits, const Tensor& local_logits, double tau,
                          bool temperature_squared = false);

/// global_distill_loss evaluated on auxiliary data.
double aux_distill_loss(const Tensor& ensemble_logits_on_aux, const Tensor& global_logits_on_aux, double tau,
                        bool temperature_squared = false);

/// exp( -(1/B^2) sum_{i,j} ||x_i - x_j|| * ||z_i - z_j|| ), diagonal included.
double diversity_loss(const Tensor& samples, const Tensor& noise);
/// Gradient of diversity_loss with respect to the samples.
Tensor diversity_loss_grad(const Tensor& samples, const Tensor& noise);

/// Batch mean of the (tau = 1) softmax of the ensemble logits.
std::vector<double> class_frequency(const Tensor& ensemble_logits);

/// sum_c p_c log p_c, i.e. the negative entropy of p.
double info_entropy_loss(std::span<const double> p);
/// Gradient of info_entropy_loss(class_frequency(logits)) with respect to the logits.
Tensor info_entropy_loss_grad(const Tensor& ensemble_logits);

/// fid + b1 * adv + b2 * div + b3 * info with masked terms dropped.
double generator_loss(const GeneratorLossParts& parts, const LossWeights& weights, const LossMask& mask);

}  // namespace fedzge
