#include <cassert>
#include <cmath>

#include "fedzge/kernels.hpp"

namespace fedzge::kernels {

namespace {

inline void distance_row(const double* x, double* out, std::size_t i, std::size_t rows, std::size_t dim) {
  const double* xi = x + i * dim;
  for (std::size_t j = 0; j < rows; ++j) {
    const double* xj = x + j * dim;
    double acc = 0.0;
    for (std::size_t p = 0; p < dim; ++p) {
      const double diff = xi[p] - xj[p];
      acc += diff * diff;
    }
    out[i * rows + j] = std::sqrt(acc);
  }
}

}  // namespace

void pairwise_distances_serial(std::span<const double> x, std::span<double> out, std::size_t rows,
                               std::size_t dim) {
  assert(x.size() == rows * dim && out.size() == rows * rows);
  for (std::size_t i = 0; i < rows; ++i) distance_row(x.data(), out.data(), i, rows, dim);
}

void pairwise_distances_omp(std::span<const double> x, std::span<double> out, std::size_t rows, std::size_t dim) {
  assert(x.size() == rows * dim && out.size() == rows * rows);
  const auto n = static_cast<long long>(rows);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < n; ++i) distance_row(x.data(), out.data(), static_cast<std::size_t>(i), rows, dim);
}

void pairwise_distances(std::span<const double> x, std::span<double> out, std::size_t rows, std::size_t dim) {
  if (rows > 1 && rows * rows * dim >= kParallelThreshold) {
    pairwise_distances_omp(x, out, rows, dim);
  } else {
    pairwise_distances_serial(x, out, rows, dim);
  }
}

}  // namespace fedzge::kernels
