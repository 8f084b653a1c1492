#include "fedzge/network.hpp"

#include "fedzge/error.hpp"

namespace fedzge {

namespace {

std::size_t parameter_count_of(const Layer& layer) {
  return std::visit([](const auto& l) { return l.parameter_count(); }, layer);
}

}  // namespace

void Network::add(Layer layer) {
  offsets_.push_back(params_.size());
  params_.resize(params_.size() + parameter_count_of(layer), 0.0);
  layers_.push_back(std::move(layer));
  cached_ = false;
}

void Network::append(const Network& other) {
  for (std::size_t i = 0; i < other.layers_.size(); ++i) {
    add(other.layers_[i]);
    auto src = std::span<const double>(other.params_).subspan(other.offsets_[i], parameter_count_of(other.layers_[i]));
    auto dst = layer_parameters(layers_.size() - 1);
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

std::span<double> Network::layer_parameters(std::size_t index) {
  return std::span<double>(params_).subspan(offsets_.at(index), parameter_count_of(layers_.at(index)));
}

Tensor Network::forward(const Tensor& batch, std::span<const int> labels) {
  if (batch.rank() != 2) throw ShapeError("network: input must be a (batch, features) matrix");
  cached_ = false;
  ForwardContext ctx{mode_, labels};
  Tensor x = batch;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto p = std::span<const double>(params_).subspan(offsets_[i], parameter_count_of(layers_[i]));
    x = std::visit([&](auto& l) { return l.forward(x, p, ctx); }, layers_[i]);
  }
  x.check_finite("network forward");
  output_shape_ = x.shape();
  cached_ = true;
  return x;
}

Gradients Network::backward(const Tensor& upstream) {
  if (!cached_) throw Error("network: backward called without a cached forward pass");
  if (upstream.shape() != output_shape_) throw ShapeError("network: upstream shape does not match forward output");
  Gradients out;
  out.params.assign(params_.size(), 0.0);
  Tensor g = upstream;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const std::size_t count = parameter_count_of(layers_[i]);
    auto p = std::span<const double>(params_).subspan(offsets_[i], count);
    auto dp = std::span<double>(out.params).subspan(offsets_[i], count);
    g = std::visit([&](auto& l) { return l.backward(g, p, dp); }, layers_[i]);
  }
  g.check_finite("network backward");
  out.input = std::move(g);
  return out;
}

}  // namespace fedzge
