#include "fedzge/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedzge/error.hpp"
#include "fedzge/kernels.hpp"
#include "fedzge/losses.hpp"

namespace fedzge {

EnsembleWeights EnsembleWeights::from_sample_counts(std::span<const std::size_t> counts) {
  const auto total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (counts.empty() || total == 0) throw Error("ensemble weights need a positive total sample count");
  EnsembleWeights w;
  w.values.reserve(counts.size());
  for (auto n : counts) w.values.push_back(static_cast<double>(n) / static_cast<double>(total));
  return w;
}

Tensor ensemble(std::span<const Tensor> local_logits, const EnsembleWeights& weights) {
  if (local_logits.empty()) throw ShapeError("ensemble: no client logits");
  if (local_logits.size() != weights.size()) throw ShapeError("ensemble: logits/weights count mismatch");
  Tensor out = Tensor::zeros_like(local_logits.front());
  for (std::size_t k = 0; k < local_logits.size(); ++k) {
    require_same_shape(out, local_logits[k], "ensemble");
    axpy(weights.values[k], local_logits[k], out);
  }
  return out;
}

double fidelity_loss(const Tensor& ensemble_logits, std::span<const int> labels) {
  return cross_entropy(ensemble_logits, labels);
}

double global_distill_loss(const Tensor& ensemble_logits, const Tensor& global_logits, double tau,
                           bool temperature_squared) {
  const double kl = distill_kl(ensemble_logits, global_logits, tau);
  return temperature_squared ? tau * tau * kl : kl;
}

double adversarial_loss(const Tensor& ensemble_logits, const Tensor& global_logits, double tau,
                        bool temperature_squared) {
  return -global_distill_loss(ensemble_logits, global_logits, tau, temperature_squared);
}

double local_distill_loss(const Tensor& ensemble_logits, const Tensor& local_logits, double tau,
                          bool temperature_squared) {
  return global_distill_loss(ensemble_logits, local_logits, tau, temperature_squared);
}

double aux_distill_loss(const Tensor& ensemble_logits_on_aux, const Tensor& global_logits_on_aux, double tau,
                        bool temperature_squared) {
  return global_distill_loss(ensemble_logits_on_aux, global_logits_on_aux, tau, temperature_squared);
}

namespace {

void require_batch_pair(const Tensor& samples, const Tensor& noise) {
  if (samples.rank() != 2 || noise.rank() != 2) throw ShapeError("diversity: inputs must be matrices");
  if (samples.rows() != noise.rows()) throw ShapeError("diversity: batch sizes differ");
}

std::vector<double> distances(const Tensor& x) {
  std::vector<double> out(x.rows() * x.rows());
  kernels::pairwise_distances(x.data(), out, x.rows(), x.cols());
  return out;
}

}  // namespace

double diversity_loss(const Tensor& samples, const Tensor& noise) {
  require_batch_pair(samples, noise);
  const std::size_t batch = samples.rows();
  const auto dx = distances(samples);
  const auto dz = distances(noise);
  double acc = 0.0;
  for (std::size_t i = 0; i < dx.size(); ++i) acc += dx[i] * dz[i];
  return std::exp(-acc / static_cast<double>(batch * batch));
}

Tensor diversity_loss_grad(const Tensor& samples, const Tensor& noise) {
  require_batch_pair(samples, noise);
  const std::size_t batch = samples.rows();
  const std::size_t dim = samples.cols();
  const auto dx = distances(samples);
  const auto dz = distances(noise);
  double acc = 0.0;
  for (std::size_t i = 0; i < dx.size(); ++i) acc += dx[i] * dz[i];
  const double b2 = static_cast<double>(batch * batch);
  const double loss = std::exp(-acc / b2);
  // d/dx_i of the exponent: -(2/B^2) sum_j ||z_i - z_j|| (x_i - x_j) / ||x_i - x_j||
  Tensor grad({batch, dim});
  for (std::size_t i = 0; i < batch; ++i) {
    auto gi = grad.row(i);
    auto xi = samples.row(i);
    for (std::size_t j = 0; j < batch; ++j) {
      const double dist = dx[i * batch + j];
      if (i == j || dist == 0.0) continue;
      const double coeff = -2.0 * loss * dz[i * batch + j] / (b2 * dist);
      auto xj = samples.row(j);
      for (std::size_t p = 0; p < dim; ++p) gi[p] += coeff * (xi[p] - xj[p]);
    }
  }
  return grad;
}

std::vector<double> class_frequency(const Tensor& ensemble_logits) {
  const Tensor probs = softmax_t(ensemble_logits, 1.0);
  std::vector<double> p(probs.cols(), 0.0);
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    auto row = probs.row(r);
    for (std::size_t c = 0; c < p.size(); ++c) p[c] += row[c];
  }
  for (auto& v : p) v /= static_cast<double>(probs.rows());
  return p;
}

double info_entropy_loss(std::span<const double> p) {
  double acc = 0.0;
  for (double v : p) {
    if (v > 0.0) acc += v * std::log(std::max(v, kProbabilityFloor));
  }
  return acc;
}

Tensor info_entropy_loss_grad(const Tensor& ensemble_logits) {
  const Tensor probs = softmax_t(ensemble_logits, 1.0);
  const auto p = class_frequency(ensemble_logits);
  std::vector<double> g(p.size());
  for (std::size_t c = 0; c < p.size(); ++c) g[c] = std::log(std::max(p[c], kProbabilityFloor));
  const double inv_batch = 1.0 / static_cast<double>(probs.rows());
  Tensor grad = Tensor::zeros_like(probs);
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    auto s = probs.row(r);
    auto out = grad.row(r);
    const double mean_g = dot(s, g);
    for (std::size_t c = 0; c < s.size(); ++c) out[c] = inv_batch * s[c] * (g[c] - mean_g);
  }
  return grad;
}

double generator_loss(const GeneratorLossParts& parts, const LossWeights& weights, const LossMask& mask) {
  double total = 0.0;
  if (mask.fidelity) total += parts.fidelity;
  if (mask.adversarial) total += weights.adversarial * parts.adversarial;
  if (mask.diversity) total += weights.diversity * parts.diversity;
  if (mask.information) total += weights.information * parts.information;
  return total;
}

}  // namespace fedzge
