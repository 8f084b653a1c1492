#include "fedzge/models.hpp"

#include <cmath>

#include "fedzge/error.hpp"

namespace fedzge {

namespace {

void init_dense(Network& net, std::size_t layer_index, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> uniform(-bound, bound);
  for (auto& p : net.layer_parameters(layer_index)) p = uniform(rng);
}

}  // namespace

Network build_classifier(const ClassifierSpec& spec, std::uint64_t seed) {
  if (spec.input_dim == 0 || spec.num_classes == 0) throw Error("classifier: input_dim and num_classes must be positive");
  if (spec.hidden.empty()) throw Error("classifier: at least one hidden layer is required");
  Rng rng(seed);
  Network net;
  std::size_t width = spec.input_dim;
  for (std::size_t h : spec.hidden) {
    net.add(Dense{width, h});
    init_dense(net, net.layer_count() - 1, width, rng);
    net.add(Activation{spec.activation});
    width = h;
  }
  net.add(Dense{width, spec.num_classes});
  init_dense(net, net.layer_count() - 1, width, rng);
  return net;
}

std::size_t classifier_parameter_count(const ClassifierSpec& spec) {
  std::size_t count = 0;
  std::size_t width = spec.input_dim;
  for (std::size_t h : spec.hidden) {
    count += width * h + h;
    width = h;
  }
  return count + width * spec.num_classes + spec.num_classes;
}

Network build_generator(const GeneratorSpec& spec, std::uint64_t seed) {
  if (spec.noise_dim == 0 || spec.num_classes == 0 || spec.output_dim == 0) {
    throw Error("generator: noise_dim, num_classes and output_dim must be positive");
  }
  Rng rng(seed);
  Network net;
  net.add(EmbedConcat{spec.num_classes, spec.noise_dim});
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& p : net.layer_parameters(0)) p = normal(rng);

  std::size_t width = 2 * spec.noise_dim;
  for (std::size_t h : spec.hidden) {
    net.add(Dense{width, h});
    init_dense(net, net.layer_count() - 1, width, rng);
    BatchNorm1d bn;
    bn.features = h;
    net.add(bn);
    auto gamma_beta = net.layer_parameters(net.layer_count() - 1);
    for (std::size_t j = 0; j < h; ++j) gamma_beta[j] = 1.0;
    net.add(Activation{ActivationKind::leaky_relu, 0.2});
    width = h;
  }
  net.add(Dense{width, spec.output_dim});
  init_dense(net, net.layer_count() - 1, width, rng);
  net.add(Activation{ActivationKind::tanh});
  return net;
}

SyntheticBatch generate(Network& generator, std::size_t batch, std::size_t classes, std::size_t noise_dim, Rng& rng) {
  if (batch == 0) throw Error("generate: batch size must be positive");
  SyntheticBatch out;
  out.noise = Tensor({batch, noise_dim});
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& v : out.noise.data()) v = normal(rng);
  std::uniform_int_distribution<int> label(0, static_cast<int>(classes) - 1);
  out.labels.resize(batch);
  for (auto& y : out.labels) y = label(rng);
  out.samples = generator.forward(out.noise, out.labels);
  return out;
}

}  // namespace fedzge
