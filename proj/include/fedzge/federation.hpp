#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedzge/adam.hpp"
#include "fedzge/client.hpp"
#include "fedzge/comms.hpp"
#include "fedzge/datasets.hpp"
#include "fedzge/models.hpp"
#include "fedzge/objectives.hpp"
#include "fedzge/rng.hpp"
#include "fedzge/zo_grad.hpp"

namespace fedzge {

enum class Method { fedzge, fedavg, distill_fl, whitebox_datafree };

std::string_view to_string(Method m);

/// Server-side protocol steps, in the order they appear in a round.
enum class Phase {
  client_sampling,
  local_update,
  generation,
  distribution,
  local_prediction,
  server_aggregation,
  generator_update,
  global_update,
  ensemble_distribution,
  local_distillation,
  model_distribution,
  model_upload,
  auxiliary_distribution,
};

std::string_view to_string(Phase p);

/// The FedZGE round as a phase list, used to check traces.
std::span<const Phase> fedzge_phase_order();

struct DataConfig {
  std::size_t classes = 4;
  std::size_t dim = 16;
  std::size_t train_per_class = 500;
  std::size_t test_per_class = 200;
  std::size_t aux_per_class = 100;
  double spread = 0.6;
  double alpha = 0.1;
  // Optional CSV files replacing the synthetic sets.
  std::string train_csv;
  std::string test_csv;
  std::string aux_csv;
};

struct FederationConfig {
  Method method = Method::fedzge;
  bool labeled_aux = true;  // distill_fl: labels are shared with clients (MHAT) or not (DS-FL)
  std::size_t clients = 10;
  double sampling_fraction = 1.0;
  std::size_t rounds = 100;
  std::size_t local_epochs = 10;
  std::size_t local_distill_epochs = 10;
  std::size_t global_distill_epochs = 10;
  std::size_t local_batch = 256;
  double lr_local = 0.01;
  double lr_global = 0.01;
  double lr_generator = 0.001;
  LossWeights loss;
  LossMask mask;
  bool local_distill = true;
  ZOConfig zo;
  std::size_t synthetic_batch = 500;
  std::size_t noise_dim = 16;
  std::vector<std::size_t> generator_hidden{64, 64};
  std::vector<std::size_t> client_hidden{32};
  bool heterogeneous = false;
  std::uint64_t seed = 0;

  void validate() const;
};

struct RoundMetrics {
  std::size_t round = 0;
  double accuracy = 0.0;
  GeneratorLossParts losses;
  double global_distill = 0.0;  // mean over the E global distillation epochs
  double local_distill = 0.0;   // mean over participants of the last local distillation loss
  std::uint64_t bytes_down = 0;
  std::uint64_t bytes_up = 0;
  std::vector<std::size_t> participants;
  std::vector<Phase> phases;

  bool operator==(const RoundMetrics&) const;
};

struct ServerState {
  Network global_model;
  Network generator;
  AdamState global_optimizer;
  AdamState generator_optimizer;
  std::size_t round = 0;
  Rng sampling_rng;
  Rng generation_rng;
  Rng perturbation_rng;
  Rng auxiliary_rng;
};

/// Everything one simulated run owns.
struct Federation {
  FederationConfig config;
  ServerState server;
  std::vector<Client> clients;
  Dataset test;
  std::optional<Dataset> auxiliary;
  CommLedger ledger;
  std::size_t input_dim = 0;
  std::size_t classes = 0;
};

/// Client architectures; the heterogeneous setting splits clients 3:3:4
/// across three MLP sizes.
std::vector<ClassifierSpec> client_specs(const FederationConfig& cfg, std::size_t input_dim, std::size_t classes);
/// The largest client architecture.
ClassifierSpec global_spec(const FederationConfig& cfg, std::size_t input_dim, std::size_t classes);

ServerState make_server_state(const FederationConfig& cfg, std::size_t input_dim, std::size_t classes);

/// Builds data, partitions it and creates clients. FedAvg and the white-box
/// variant get white-box clients; every other method gets black-box ones.
Federation make_federation(const FederationConfig& cfg, const DataConfig& data);

/// Federation around caller-provided clients (tests, custom setups).
Federation make_federation(const FederationConfig& cfg, std::vector<Client> clients, Dataset test,
                           std::optional<Dataset> auxiliary = std::nullopt);

/// ceil(fraction * K) distinct ids, uniform without replacement, ascending.
std::vector<std::size_t> sample_clients(std::size_t clients, double fraction, Rng& rng);

double local_update(Client& client, std::size_t epochs, double learning_rate, std::size_t batch_size);

/// Logits for the base batch followed by the q perturbed batches.
std::vector<Tensor> local_predict(Client& client, const PerturbedBatchSet& batches);

/// per_client[k][i] is client k's logits on batch i.
std::vector<Tensor> server_aggregate(const std::vector<std::vector<Tensor>>& per_client,
                                     const EnsembleWeights& weights);

/// Sample-count weighted parameter mean, reduced in ascending client order.
std::vector<double> average_parameters(const std::vector<std::vector<double>>& params,
                                       const EnsembleWeights& weights);

RoundMetrics run_round_fedzge(Federation& fed);
RoundMetrics run_round_whitebox(Federation& fed);
RoundMetrics run_round_fedavg(Federation& fed);
RoundMetrics run_round_distill_fl(Federation& fed);
RoundMetrics run_round(Federation& fed);

/// Entropy (nats) of the ensemble's predicted-label histogram on a fresh
/// synthetic batch, all clients weighted by sample count.
double synthetic_class_entropy(Federation& fed);

struct RunResult {
  std::uint64_t seed = 0;
  std::vector<RoundMetrics> rounds;
  CommLedger ledger;
  double final_accuracy = 0.0;
  std::optional<double> class_entropy;
};

RunResult run_rounds(Federation& fed);
RunResult run_fedzge(const FederationConfig& cfg, const DataConfig& data);
RunResult run_whitebox_datafree(const FederationConfig& cfg, const DataConfig& data);
RunResult run_fedavg(const FederationConfig& cfg, const DataConfig& data);
RunResult run_distill_fl(const FederationConfig& cfg, const DataConfig& data,
                         std::optional<Dataset> auxiliary = std::nullopt);
RunResult run_method(const FederationConfig& cfg, const DataConfig& data);

/// Test accuracy of each client trained alone for rounds * local_epochs
/// epochs, in client order.
std::vector<double> local_only_accuracies(const FederationConfig& cfg, const DataConfig& data);

/// Payload shapes for ledger-only runs, where models are never built.
struct AccountingShape {
  std::size_t sample_elements = 0;
  std::size_t classes = 0;
  std::vector<std::size_t> client_parameters;  // one per client
  std::size_t global_parameters = 0;
};

AccountingShape accounting_shape(const FederationConfig& cfg, std::size_t input_dim, std::size_t classes);

/// Replays the run's client sampling and records every payload it would
/// send, without training.
CommLedger schedule_ledger(const FederationConfig& cfg, const AccountingShape& shape);

}  // namespace fedzge
