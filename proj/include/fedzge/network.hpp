#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "fedzge/layers.hpp"
#include "fedzge/tensor.hpp"

namespace fedzge {

using Layer = std::variant<Dense, Activation, BatchNorm1d, EmbedConcat>;

/// Result of a reverse pass: gradients of <upstream, output>.
struct Gradients {
  std::vector<double> params;
  Tensor input;
};

/// Ordered stack of layers over one contiguous parameter vector.
///
/// Networks are values: copying one copies parameters, batch-norm running
/// statistics and cached activations. A single instance is single-writer
/// (forward and backward mutate caches).
class Network {
 public:
  Network() = default;

  /// Appends a layer and reserves its (zero-initialized) parameters.
  void add(Layer layer);

  /// Appends every layer of `other` (with its current parameters).
  void append(const Network& other);

  Tensor forward(const Tensor& batch, std::span<const int> labels = {});

  /// Requires a preceding forward; `upstream` must match the last output shape.
  Gradients backward(const Tensor& upstream);

  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }
  std::size_t parameter_count() const noexcept { return params_.size(); }
  std::span<double> layer_parameters(std::size_t index);

  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::size_t layer_count() const noexcept { return layers_.size(); }

  void set_mode(Mode mode) noexcept { mode_ = mode; }
  Mode mode() const noexcept { return mode_; }

  /// True when forward has run and no layer was added since.
  bool has_cache() const noexcept { return cached_; }

 private:
  std::vector<Layer> layers_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
  Mode mode_ = Mode::train;
  bool cached_ = false;
  Tensor::Shape output_shape_;
};

}  // namespace fedzge
