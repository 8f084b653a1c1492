#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedzge/federation.hpp"

namespace fedzge {

struct ExperimentConfig {
  FederationConfig federation;
  DataConfig data;
  std::vector<std::uint64_t> seeds{0};
  std::string out_dir = "out";
  std::size_t parallel = 1;  // concurrent seeds or sweep points
  // Ledger-only runs: client sampling is replayed and payloads recorded,
  // nothing is trained. Lets paper-scale shapes be costed on a laptop.
  bool accounting_only = false;
  // Overrides the MLP-derived model size in accounting-only runs.
  std::size_t model_parameters = 0;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

MeanStd mean_std(std::span<const double> values);

struct ExperimentResult {
  std::vector<RunResult> runs;  // one per seed, in seed-list order
  std::optional<MeanStd> final_accuracy;  // absent for accounting-only runs
};

/// The federation config for one seed.
FederationConfig seeded(const ExperimentConfig& cfg, std::uint64_t seed);

AccountingShape experiment_accounting_shape(const ExperimentConfig& cfg);

ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Writes metrics.csv, summary.json, ledger.csv (first seed; one
/// ledger-seed<S>.csv per seed when there are several) and
/// resolved-config.json into `dir`.
void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result, const std::filesystem::path& dir);

/// Runs `jobs` callables with at most `parallel` in flight; the first
/// failure (in job order) is rethrown.
void run_jobs(std::size_t count, std::size_t parallel, const std::function<void(std::size_t)>& job);

}  // namespace fedzge
