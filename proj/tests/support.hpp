#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "fedzge/rng.hpp"
#include "fedzge/tensor.hpp"

namespace fedzge::test {

inline Tensor random_tensor(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Tensor t({rows, cols});
  for (auto& v : t.data()) v = normal(rng);
  return t;
}

/// Central differences of f at x, step h.
inline std::vector<double> fd_gradient(const std::function<double(std::span<const double>)>& f,
                                       std::vector<double> x, double h = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
inline double rel_err(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? std::sqrt(diff) : std::sqrt(diff) / scale;
}

inline std::vector<double> to_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace fedzge::test
