#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fedzge/network.hpp"
#include "fedzge/rng.hpp"

namespace fedzge {

struct ClassifierSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;
  std::size_t num_classes = 0;
  ActivationKind activation = ActivationKind::relu;
};

/// Conditional generator shape. The label embedding width equals noise_dim.
struct GeneratorSpec {
  std::size_t noise_dim = 16;
  std::size_t num_classes = 0;
  std::vector<std::size_t> hidden{64, 64};
  std::size_t output_dim = 0;
};

/// MLP classifier: (Dense -> activation) per hidden width, then Dense to
/// num_classes. Weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Network build_classifier(const ClassifierSpec& spec, std::uint64_t seed);

/// Parameter count of build_classifier(spec) without allocating it.
std::size_t classifier_parameter_count(const ClassifierSpec& spec);

/// EmbedConcat -> [Dense -> BatchNorm -> LeakyReLU(0.2)] per hidden width
/// -> Dense -> Tanh. Input is noise (B, noise_dim) plus labels.
Network build_generator(const GeneratorSpec& spec, std::uint64_t seed);

struct SyntheticBatch {
  Tensor noise;             // (B, noise_dim)
  std::vector<int> labels;  // B uniform labels in [0, C)
  Tensor samples;           // (B, d) = G(noise, labels)
};

/// Samples noise ~ N(0, 1) and uniform labels, then runs the generator
/// (leaving its forward cache in place for a following backward).
SyntheticBatch generate(Network& generator, std::size_t batch, std::size_t classes, std::size_t noise_dim, Rng& rng);

}  // namespace fedzge
