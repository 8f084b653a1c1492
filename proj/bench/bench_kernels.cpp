#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "fedzge/kernels.hpp"

namespace {

std::vector<double> random_values(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

// Operand sizes per layout: nt a(m x k) b(n x k); nn a(m x n) b(n x k);
// tn a(m x n) b(m x k). n = k = 64 throughout, m is the batch.
enum class Layout { nt, nn, tn };

template <auto Kernel, Layout L>
void gemm(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const std::size_t n = 64;
  const std::size_t k = 64;
  const std::size_t a_size = L == Layout::nt ? m * k : m * n;
  const std::size_t b_size = L == Layout::tn ? m * k : n * k;
  const std::size_t c_size = L == Layout::nt ? m * n : L == Layout::nn ? m * k : n * k;
  const auto a = random_values(a_size, 1);
  const auto b = random_values(b_size, 2);
  std::vector<double> c(c_size);
  for (auto _ : state) {
    Kernel(a, b, c, m, n, k);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m * n * k));
}

template <auto Kernel>
void pairwise(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t dim = 16;
  const auto x = random_values(rows * dim, 3);
  std::vector<double> out(rows * rows);
  for (auto _ : state) {
    Kernel(x, out, rows, dim);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows * rows));
}

}  // namespace

using namespace fedzge::kernels;

BENCHMARK_TEMPLATE2(gemm, gemm_nt_serial, Layout::nt)->Name("gemm_nt/serial")->Arg(128)->Arg(512)->Arg(2048);
BENCHMARK_TEMPLATE2(gemm, gemm_nt_omp, Layout::nt)->Name("gemm_nt/omp")->Arg(128)->Arg(512)->Arg(2048);
BENCHMARK_TEMPLATE2(gemm, gemm_nn_serial, Layout::nn)->Name("gemm_nn/serial")->Arg(128)->Arg(512)->Arg(2048);
BENCHMARK_TEMPLATE2(gemm, gemm_nn_omp, Layout::nn)->Name("gemm_nn/omp")->Arg(128)->Arg(512)->Arg(2048);
BENCHMARK_TEMPLATE2(gemm, gemm_tn_serial, Layout::tn)->Name("gemm_tn/serial")->Arg(128)->Arg(512)->Arg(2048);
BENCHMARK_TEMPLATE2(gemm, gemm_tn_omp, Layout::tn)->Name("gemm_tn/omp")->Arg(128)->Arg(512)->Arg(2048);
BENCHMARK_TEMPLATE(pairwise, pairwise_distances_serial)->Name("pairwise/serial")->Arg(128)->Arg(500);
BENCHMARK_TEMPLATE(pairwise, pairwise_distances_omp)->Name("pairwise/omp")->Arg(128)->Arg(500);
BENCHMARK_MAIN();
