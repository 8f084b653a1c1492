#pragma once

// Dense inner loops used by the layers and the diversity loss.
//
// Every kernel has a `_serial` reference and an `_omp` variant. The OpenMP
// variants split work over output rows only; each output element is
// accumulated in the same order as the serial loop, so both variants are
// bit-identical for any thread count. The unsuffixed entry points pick the
// OpenMP variant above a small work threshold.

#include <cstddef>
#include <span>

namespace fedzge::kernels {

/// c(m x n) = a(m x k) * b(n x k)^T
void gemm_nt_serial(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
                    std::size_t n, std::size_t k);
void gemm_nt_omp(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
                 std::size_t n, std::size_t k);
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
             std::size_t n, std::size_t k);

/// c(m x k) = a(m x n) * b(n x k)
void gemm_nn_serial(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
                    std::size_t n, std::size_t k);
void gemm_nn_omp(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
                 std::size_t n, std::size_t k);
void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
             std::size_t n, std::size_t k);

/// c(n x k) = a(m x n)^T * b(m x k)
void gemm_tn_serial(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
                    std::size_t n, std::size_t k);
void gemm_tn_omp(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
                 std::size_t n, std::size_t k);
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
             std::size_t n, std::size_t k);

/// out(rows x rows) with out[i][j] = ||x_i - x_j||_2 for x(rows x dim).
void pairwise_distances_serial(std::span<const double> x, std::span<double> out, std::size_t rows, std::size_t dim);
void pairwise_distances_omp(std::span<const double> x, std::span<double> out, std::size_t rows, std::size_t dim);
void pairwise_distances(std::span<const double> x, std::span<double> out, std::size_t rows, std::size_t dim);

/// Work (multiply-adds) below which the dispatchers stay serial.
inline constexpr std::size_t kParallelThreshold = 1 << 15;

}  // namespace fedzge::kernels
