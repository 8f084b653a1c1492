#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace fedzge {

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  explicit AdamState(std::size_t parameter_count)
      : first_moment(parameter_count, 0.0), second_moment(parameter_count, 0.0) {}
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double learning_rate);

}  // namespace fedzge
