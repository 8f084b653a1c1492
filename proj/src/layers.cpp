#include "fedzge/layers.hpp"

#include <cmath>
#include <string>

#include "fedzge/error.hpp"
#include "fedzge/kernels.hpp"

namespace fedzge {

Tensor Dense::forward(const Tensor& x, std::span<const double> params, const ForwardContext&) {
  if (x.rank() != 2 || x.cols() != in) {
    throw ShapeError("dense: expected input width " + std::to_string(in) + ", got " + std::to_string(x.cols()));
  }
  const std::size_t batch = x.rows();
  Tensor y({batch, out});
  auto weights = params.first(in * out);
  auto bias = params.subspan(in * out, out);
  kernels::gemm_nt(x.data(), weights, y.data(), batch, out, in);
  for (std::size_t r = 0; r < batch; ++r) {
    auto row = y.row(r);
    for (std::size_t j = 0; j < out; ++j) row[j] += bias[j];
  }
  cached_input = x;
  return y;
}

Tensor Dense::backward(const Tensor& upstream, std::span<const double> params, std::span<double> grads) {
  const std::size_t batch = cached_input.rows();
  if (upstream.rows() != batch || upstream.cols() != out) throw ShapeError("dense: upstream shape mismatch");
  auto weights = params.first(in * out);
  kernels::gemm_tn(upstream.data(), cached_input.data(), grads.first(in * out), batch, out, in);
  auto bias_grad = grads.subspan(in * out, out);
  for (std::size_t j = 0; j < out; ++j) bias_grad[j] = 0.0;
  for (std::size_t r = 0; r < batch; ++r) {
    auto row = upstream.row(r);
    for (std::size_t j = 0; j < out; ++j) bias_grad[j] += row[j];
  }
  Tensor dx({batch, in});
  kernels::gemm_nn(upstream.data(), weights, dx.data(), batch, out, in);
  return dx;
}

Tensor Activation::forward(const Tensor& x, std::span<const double>, const ForwardContext&) {
  Tensor y = x;
  auto v = y.data();
  switch (kind) {
    case ActivationKind::relu:
      for (auto& e : v) e = e > 0.0 ? e : 0.0;
      break;
    case ActivationKind::leaky_relu:
      for (auto& e : v) e = e > 0.0 ? e : negative_slope * e;
      break;
    case ActivationKind::tanh:
      for (auto& e : v) e = std::tanh(e);
      break;
  }
  cached_input = x;
  cached_output = y;
  return y;
}

Tensor Activation::backward(const Tensor& upstream, std::span<const double>, std::span<double>) {
  require_same_shape(upstream, cached_input, "activation backward");
  Tensor dx = upstream;
  auto g = dx.data();
  auto x = cached_input.data();
  auto y = cached_output.data();
  switch (kind) {
    case ActivationKind::relu:
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = x[i] > 0.0 ? g[i] : 0.0;
      break;
    case ActivationKind::leaky_relu:
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = x[i] > 0.0 ? g[i] : negative_slope * g[i];
      break;
    case ActivationKind::tanh:
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= 1.0 - y[i] * y[i];
      break;
  }
  return dx;
}

Tensor BatchNorm1d::forward(const Tensor& x, std::span<const double> params, const ForwardContext& ctx) {
  if (x.rank() != 2 || x.cols() != features) throw ShapeError("batchnorm: feature width mismatch");
  const std::size_t batch = x.rows();
  auto gamma = params.first(features);
  auto beta = params.subspan(features, features);
  if (running_mean.size() != features) {
    running_mean.assign(features, 0.0);
    running_var.assign(features, 1.0);
  }
  cached_normalized = Tensor({batch, features});
  cached_inv_std.assign(features, 0.0);
  cached_mode = ctx.mode;
  Tensor y({batch, features});
  for (std::size_t j = 0; j < features; ++j) {
    double mean = 0.0;
    double var = 0.0;
    if (ctx.mode == Mode::train) {
      for (std::size_t r = 0; r < batch; ++r) mean += x(r, j);
      mean /= static_cast<double>(batch);
      for (std::size_t r = 0; r < batch; ++r) {
        const double c = x(r, j) - mean;
        var += c * c;
      }
      var /= static_cast<double>(batch);
      const double unbiased = batch > 1 ? var * static_cast<double>(batch) / static_cast<double>(batch - 1) : var;
      running_mean[j] = momentum * running_mean[j] + (1.0 - momentum) * mean;
      running_var[j] = momentum * running_var[j] + (1.0 - momentum) * unbiased;
    } else {
      mean = running_mean[j];
      var = running_var[j];
    }
    const double inv_std = 1.0 / std::sqrt(var + epsilon);
    cached_inv_std[j] = inv_std;
    for (std::size_t r = 0; r < batch; ++r) {
      const double n = (x(r, j) - mean) * inv_std;
      cached_normalized(r, j) = n;
      y(r, j) = gamma[j] * n + beta[j];
    }
  }
  return y;
}

Tensor BatchNorm1d::backward(const Tensor& upstream, std::span<const double> params, std::span<double> grads) {
  require_same_shape(upstream, cached_normalized, "batchnorm backward");
  const std::size_t batch = upstream.rows();
  const auto n = static_cast<double>(batch);
  auto gamma = params.first(features);
  auto dgamma = grads.first(features);
  auto dbeta = grads.subspan(features, features);
  Tensor dx({batch, features});
  for (std::size_t j = 0; j < features; ++j) {
    double sum_g = 0.0;
    double sum_gn = 0.0;
    for (std::size_t r = 0; r < batch; ++r) {
      sum_g += upstream(r, j);
      sum_gn += upstream(r, j) * cached_normalized(r, j);
    }
    dgamma[j] = sum_gn;
    dbeta[j] = sum_g;
    const double scale = gamma[j] * cached_inv_std[j];
    if (cached_mode == Mode::train) {
      for (std::size_t r = 0; r < batch; ++r) {
        dx(r, j) = scale / n * (n * upstream(r, j) - sum_g - cached_normalized(r, j) * sum_gn);
      }
    } else {
      for (std::size_t r = 0; r < batch; ++r) dx(r, j) = scale * upstream(r, j);
    }
  }
  return dx;
}

Tensor EmbedConcat::forward(const Tensor& x, std::span<const double> params, const ForwardContext& ctx) {
  const std::size_t batch = x.rows();
  if (ctx.labels.size() != batch) {
    throw ShapeError("embedding: expected " + std::to_string(batch) + " labels, got " +
                     std::to_string(ctx.labels.size()));
  }
  const std::size_t width = x.cols();
  Tensor y({batch, width + dim});
  for (std::size_t r = 0; r < batch; ++r) {
    const int label = ctx.labels[r];
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw ShapeError("embedding: label " + std::to_string(label) + " out of range");
    }
    auto src = x.row(r);
    auto dst = y.row(r);
    for (std::size_t j = 0; j < width; ++j) dst[j] = src[j];
    auto emb = params.subspan(static_cast<std::size_t>(label) * dim, dim);
    for (std::size_t j = 0; j < dim; ++j) dst[width + j] = emb[j];
  }
  cached_labels.assign(ctx.labels.begin(), ctx.labels.end());
  cached_width = width;
  return y;
}

Tensor EmbedConcat::backward(const Tensor& upstream, std::span<const double>, std::span<double> grads) {
  const std::size_t batch = cached_labels.size();
  if (upstream.rows() != batch || upstream.cols() != cached_width + dim) {
    throw ShapeError("embedding: upstream shape mismatch");
  }
  for (auto& g : grads) g = 0.0;
  Tensor dx({batch, cached_width});
  for (std::size_t r = 0; r < batch; ++r) {
    auto g = upstream.row(r);
    auto dst = dx.row(r);
    for (std::size_t j = 0; j < cached_width; ++j) dst[j] = g[j];
    auto emb = grads.subspan(static_cast<std::size_t>(cached_labels[r]) * dim, dim);
    for (std::size_t j = 0; j < dim; ++j) emb[j] += g[cached_width + j];
  }
  return dx;
}

}  // namespace fedzge
