#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fedzge/tensor.hpp"

namespace fedzge {

enum class Mode { train, eval };

enum class ActivationKind { relu, leaky_relu, tanh };

/// Per-call inputs that are not part of the data tensor.
struct ForwardContext {
  Mode mode = Mode::train;
  std::span<const int> labels;  // consumed by EmbedConcat
};

/// y = x W^T + b with W stored (out x in) followed by b (out).
struct Dense {
  std::size_t in = 0;
  std::size_t out = 0;

  std::size_t parameter_count() const { return in * out + out; }
  Tensor forward(const Tensor& x, std::span<const double> params, const ForwardContext& ctx);
  Tensor backward(const Tensor& upstream, std::span<const double> params, std::span<double> grads);

  Tensor cached_input;
};

struct Activation {
  ActivationKind kind = ActivationKind::relu;
  double negative_slope = 0.2;

  std::size_t parameter_count() const { return 0; }
  Tensor forward(const Tensor& x, std::span<const double> params, const ForwardContext& ctx);
  Tensor backward(const Tensor& upstream, std::span<const double> params, std::span<double> grads);

  Tensor cached_input;
  Tensor cached_output;
};

/// Per-feature batch normalization over the batch dimension. Parameters are
/// gamma (features) then beta (features). Train mode normalizes with the
/// batch statistics and updates the running averages; eval mode uses the
/// running averages.
struct BatchNorm1d {
  std::size_t features = 0;
  double momentum = 0.9;
  double epsilon = 1e-5;
  std::vector<double> running_mean;
  std::vector<double> running_var;

  std::size_t parameter_count() const { return 2 * features; }
  Tensor forward(const Tensor& x, std::span<const double> params, const ForwardContext& ctx);
  Tensor backward(const Tensor& upstream, std::span<const double> params, std::span<double> grads);

  Tensor cached_normalized;
  std::vector<double> cached_inv_std;
  Mode cached_mode = Mode::train;
};

/// Appends a learned label embedding to every input row:
/// (B, w) -> (B, w + dim). Parameters are the (classes x dim) table.
/// The input gradient covers only the first w columns.
struct EmbedConcat {
  std::size_t classes = 0;
  std::size_t dim = 0;

  std::size_t parameter_count() const { return classes * dim; }
  Tensor forward(const Tensor& x, std::span<const double> params, const ForwardContext& ctx);
  Tensor backward(const Tensor& upstream, std::span<const double> params, std::span<double> grads);

  std::vector<int> cached_labels;
  std::size_t cached_width = 0;
};

}  // namespace fedzge
