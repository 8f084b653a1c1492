#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace fedzge {

/// Runs fn(i) for i in [0, n) under OpenMP. Each call must only touch state
/// owned by index i. The first exception (lowest index) is rethrown after
/// the loop.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace fedzge
