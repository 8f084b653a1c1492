#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "fedzge/tensor.hpp"

namespace fedzge {

/// Labeled samples. Labels are 0-based class indices in [0, num_classes).
struct Dataset {
  Tensor samples;  // (N, d)
  std::vector<int> labels;
  std::size_t num_classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return samples.cols(); }
  std::vector<std::size_t> class_counts() const;
  Dataset subset(std::span<const std::size_t> indices) const;
};

struct PartitionSpec {
  std::size_t clients = 1;
  double alpha = 1.0;
  std::uint64_t seed = 0;
};

/// Gaussian class clusters around distinct lattice points in [-1, 1]^d.
///
/// Sample = (mean_c + spread * N(0, I)) / (1 + 3 * spread), clamped to
/// [-1, 1]. Every class gets exactly `per_class` samples, ordered by class.
Dataset make_synthetic(std::size_t classes, std::size_t dim, std::size_t per_class, double spread,
                       std::uint64_t seed);

/// Lattice point for `label` used by make_synthetic (before rescaling).
std::vector<double> class_mean(std::size_t label, std::size_t classes, std::size_t dim);

/// Dirichlet label-skew split returning sample indices per client.
///
/// Each class is shuffled and divided by largest-remainder apportionment of
/// Dir(alpha) proportions (ties to the lower client index). A client left
/// with no samples receives one sample from the largest shard.
std::vector<std::vector<std::size_t>> dirichlet_partition_indices(const Dataset& ds, const PartitionSpec& spec);

std::vector<Dataset> dirichlet_partition(const Dataset& ds, const PartitionSpec& spec);

/// Header `label,f0,...,f{d-1}`; values written with round-trip precision.
void save_csv(const Dataset& ds, const std::filesystem::path& path);

/// When `num_classes` is absent it is inferred as max label + 1.
Dataset load_csv(const std::filesystem::path& path, std::optional<std::size_t> num_classes = std::nullopt);

}  // namespace fedzge
