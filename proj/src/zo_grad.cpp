#include "fedzge/zo_grad.hpp"

#include <cmath>

#include "fedzge/error.hpp"
#include "fedzge/losses.hpp"

namespace fedzge {

void ZOConfig::validate() const {
  if (directions < 1) throw ConfigError("zo.directions: q must be at least 1");
  if (!(smoothing > 0.0) || !std::isfinite(smoothing)) throw ConfigError("zo.smoothing: must be positive");
}

std::vector<Tensor> sample_perturbations(std::size_t batch, std::size_t dim, const ZOConfig& cfg, Rng& rng) {
  cfg.validate();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Tensor> out;
  out.reserve(cfg.directions);
  const double radius = std::sqrt(static_cast<double>(dim));
  for (std::size_t i = 0; i < cfg.directions; ++i) {
    Tensor u({batch, dim});
    for (auto& v : u.data()) v = normal(rng);
    if (cfg.mode == PerturbationMode::sphere) {
      for (std::size_t r = 0; r < batch; ++r) {
        auto row = u.row(r);
        const double n = norm2(row);
        for (auto& v : row) v *= radius / n;
      }
    }
    out.push_back(std::move(u));
  }
  return out;
}

PerturbedBatchSet make_perturbed_set(const Tensor& base, const ZOConfig& cfg, Rng& rng) {
  PerturbedBatchSet set;
  set.base = base;
  set.directions = sample_perturbations(base.rows(), base.cols(), cfg, rng);
  set.perturbed.reserve(set.directions.size());
  for (const auto& u : set.directions) {
    Tensor p = base;
    axpy(cfg.smoothing, u, p);
    set.perturbed.push_back(std::move(p));
  }
  return set;
}

GeneratorLossEval fd_loss_at(const Tensor& x, const Tensor& noise, std::span<const int> labels,
                             const Tensor& ensemble_logits, const Tensor& global_logits, const LossWeights& weights,
                             const LossMask& mask) {
  if (ensemble_logits.rows() != x.rows() || labels.size() != x.rows()) {
    throw ShapeError("fd_loss_at: batch size mismatch");
  }
  GeneratorLossEval eval;
  if (mask.fidelity) eval.parts.fidelity = fidelity_loss(ensemble_logits, labels);
  if (mask.adversarial) {
    eval.parts.adversarial =
        adversarial_loss(ensemble_logits, global_logits, weights.temperature, weights.temperature_squared);
  }
  if (mask.diversity) eval.parts.diversity = diversity_loss(x, noise);
  if (mask.information) eval.parts.information = info_entropy_loss(class_frequency(ensemble_logits));
  eval.total = generator_loss(eval.parts, weights, mask);
  return eval;
}

Tensor zo_input_grad(double base_loss, std::span<const double> perturbed_losses, std::span<const Tensor> directions,
                     const ZOConfig& cfg) {
  cfg.validate();
  if (directions.empty() || perturbed_losses.size() != directions.size()) {
    throw ShapeError("zo_input_grad: need one loss per direction");
  }
  const auto dim = static_cast<double>(directions.front().cols());
  const auto q = static_cast<double>(directions.size());
  Tensor grad = Tensor::zeros_like(directions.front());
  for (std::size_t i = 0; i < directions.size(); ++i) {
    const double coeff = dim * (perturbed_losses[i] - base_loss) / cfg.smoothing / q;
    axpy(coeff, directions[i], grad);
  }
  grad.check_finite("zo_input_grad");
  return grad;
}

std::vector<double> chain_to_generator(Network& generator, const Tensor& input_grad) {
  return generator.backward(input_grad).params;
}

Tensor true_input_grad(std::span<Network> local_models, const EnsembleWeights& weights, Network& global_model,
                       const Tensor& x, const Tensor& noise, std::span<const int> labels,
                       const LossWeights& loss_weights, const LossMask& mask) {
  if (local_models.size() != weights.size()) throw ShapeError("true_input_grad: models/weights count mismatch");
  std::vector<Tensor> logits;
  logits.reserve(local_models.size());
  for (auto& model : local_models) logits.push_back(model.forward(x));
  const Tensor ens = ensemble(logits, weights);
  const Tensor global = global_model.forward(x);

  Tensor d_ens = Tensor::zeros_like(ens);
  Tensor d_global = Tensor::zeros_like(global);
  if (mask.fidelity) d_ens += cross_entropy_grad(ens, labels);
  if (mask.adversarial) {
    const auto g = distill_kl_grad(ens, global, loss_weights.temperature);
    const double tau_sq = loss_weights.temperature_squared ? loss_weights.temperature * loss_weights.temperature : 1.0;
    axpy(-loss_weights.adversarial * tau_sq, g.teacher, d_ens);
    axpy(-loss_weights.adversarial * tau_sq, g.student, d_global);
  }
  if (mask.information) axpy(loss_weights.information, info_entropy_loss_grad(ens), d_ens);

  Tensor dx = Tensor::zeros_like(x);
  for (std::size_t k = 0; k < local_models.size(); ++k) {
    axpy(weights.values[k], local_models[k].backward(d_ens).input, dx);
  }
  if (mask.adversarial) dx += global_model.backward(d_global).input;
  if (mask.diversity) axpy(loss_weights.diversity, diversity_loss_grad(x, noise), dx);
  return dx;
}

void generator_step(Network& generator, std::span<const double> param_grads, AdamState& state, double learning_rate) {
  adam_step(generator.parameters(), param_grads, state, learning_rate);
}

}  // namespace fedzge
