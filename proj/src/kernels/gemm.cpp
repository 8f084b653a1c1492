#include <cassert>

#include "fedzge/kernels.hpp"

namespace fedzge::kernels {

namespace {

inline void nt_row(const double* a, const double* b, double* c, std::size_t i, std::size_t n, std::size_t k) {
  const double* ai = a + i * k;
  double* ci = c + i * n;
  for (std::size_t j = 0; j < n; ++j) {
    const double* bj = b + j * k;
    double acc = 0.0;
    for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
    ci[j] = acc;
  }
}

inline void nn_row(const double* a, const double* b, double* c, std::size_t i, std::size_t n, std::size_t k) {
  const double* ai = a + i * n;
  double* ci = c + i * k;
  for (std::size_t p = 0; p < k; ++p) ci[p] = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double aij = ai[j];
    const double* bj = b + j * k;
    for (std::size_t p = 0; p < k; ++p) ci[p] += aij * bj[p];
  }
}

// Row j of a^T b: sum over i of a[i][j] * b[i][:], i ascending.
inline void tn_row(const double* a, const double* b, double* c, std::size_t j, std::size_t m, std::size_t n,
                   std::size_t k) {
  double* cj = c + j * k;
  for (std::size_t p = 0; p < k; ++p) cj[p] = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double aij = a[i * n + j];
    const double* bi = b + i * k;
    for (std::size_t p = 0; p < k; ++p) cj[p] += aij * bi[p];
  }
}

}  // namespace

void gemm_nt_serial(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
                    std::size_t n, std::size_t k) {
  assert(a.size() == m * k && b.size() == n * k && c.size() == m * n);
  for (std::size_t i = 0; i < m; ++i) nt_row(a.data(), b.data(), c.data(), i, n, k);
}

void gemm_nt_omp(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
                 std::size_t n, std::size_t k) {
  assert(a.size() == m * k && b.size() == n * k && c.size() == m * n);
  const auto rows = static_cast<long long>(m);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < rows; ++i) nt_row(a.data(), b.data(), c.data(), static_cast<std::size_t>(i), n, k);
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
             std::size_t n, std::size_t k) {
  if (m > 1 && m * n * k >= kParallelThreshold) {
    gemm_nt_omp(a, b, c, m, n, k);
  } else {
    gemm_nt_serial(a, b, c, m, n, k);
  }
}

void gemm_nn_serial(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
                    std::size_t n, std::size_t k) {
  assert(a.size() == m * n && b.size() == n * k && c.size() == m * k);
  for (std::size_t i = 0; i < m; ++i) nn_row(a.data(), b.data(), c.data(), i, n, k);
}

void gemm_nn_omp(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
                 std::size_t n, std::size_t k) {
  assert(a.size() == m * n && b.size() == n * k && c.size() == m * k);
  const auto rows = static_cast<long long>(m);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < rows; ++i) nn_row(a.data(), b.data(), c.data(), static_cast<std::size_t>(i), n, k);
}

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
             std::size_t n, std::size_t k) {
  if (m > 1 && m * n * k >= kParallelThreshold) {
    gemm_nn_omp(a, b, c, m, n, k);
  } else {
    gemm_nn_serial(a, b, c, m, n, k);
  }
}

void gemm_tn_serial(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
                    std::size_t n, std::size_t k) {
  assert(a.size() == m * n && b.size() == m * k && c.size() == n * k);
  for (std::size_t j = 0; j < n; ++j) tn_row(a.data(), b.data(), c.data(), j, m, n, k);
}

void gemm_tn_omp(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
                 std::size_t n, std::size_t k) {
  assert(a.size() == m * n && b.size() == m * k && c.size() == n * k);
  const auto rows = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
  for (long long j = 0; j < rows; ++j) tn_row(a.data(), b.data(), c.data(), static_cast<std::size_t>(j), m, n, k);
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
             std::size_t n, std::size_t k) {
  if (n > 1 && m * n * k >= kParallelThreshold) {
    gemm_tn_omp(a, b, c, m, n, k);
  } else {
    gemm_tn_serial(a, b, c, m, n, k);
  }
}

}  // namespace fedzge::kernels
