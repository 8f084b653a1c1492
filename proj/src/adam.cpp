#include "fedzge/adam.hpp"

#include <cmath>

#include "fedzge/error.hpp"

namespace fedzge {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double learning_rate) {
  if (params.size() != grads.size()) throw ShapeError("adam: parameter and gradient lengths differ");
  if (!(learning_rate > 0.0)) throw Error("adam: learning rate must be positive");
  if (state.first_moment.empty() && state.second_moment.empty()) {
    state.first_moment.assign(params.size(), 0.0);
    state.second_moment.assign(params.size(), 0.0);
  }
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size()) {
    throw ShapeError("adam: moment vectors do not match parameter count");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.first_moment[i] = state.beta1 * state.first_moment[i] + (1.0 - state.beta1) * g;
    state.second_moment[i] = state.beta2 * state.second_moment[i] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.first_moment[i] / correction1;
    const double v_hat = state.second_moment[i] / correction2;
    params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

}  // namespace fedzge
