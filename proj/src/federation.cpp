#include "fedzge/federation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fedzge/error.hpp"
#include "fedzge/log.hpp"
#include "fedzge/losses.hpp"
#include "fedzge/parallel.hpp"

namespace fedzge {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::fedzge: return "fedzge";
    case Method::fedavg: return "fedavg";
    case Method::distill_fl: return "distill_fl";
    case Method::whitebox_datafree: return "whitebox_datafree";
  }
  return "unknown";
}

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::client_sampling: return "client_sampling";
    case Phase::local_update: return "local_update";
    case Phase::generation: return "generation";
    case Phase::distribution: return "distribution";
    case Phase::local_prediction: return "local_prediction";
    case Phase::server_aggregation: return "server_aggregation";
    case Phase::generator_update: return "generator_update";
    case Phase::global_update: return "global_update";
    case Phase::ensemble_distribution: return "ensemble_distribution";
    case Phase::local_distillation: return "local_distillation";
    case Phase::model_distribution: return "model_distribution";
    case Phase::model_upload: return "model_upload";
    case Phase::auxiliary_distribution: return "auxiliary_distribution";
  }
  return "unknown";
}

namespace {

constexpr Phase kFedzgeOrder[] = {
    Phase::client_sampling,  Phase::local_update,       Phase::generation,
    Phase::distribution,     Phase::local_prediction,   Phase::server_aggregation,
    Phase::generator_update, Phase::global_update,      Phase::ensemble_distribution,
    Phase::local_distillation,
};

std::vector<Phase> method_phases(const FederationConfig& cfg) {
  std::vector<Phase> phases;
  switch (cfg.method) {
    case Method::fedzge:
    case Method::whitebox_datafree:
      phases.assign(std::begin(kFedzgeOrder), std::end(kFedzgeOrder));
      break;
    case Method::fedavg:
      phases = {Phase::client_sampling, Phase::model_distribution, Phase::local_update, Phase::model_upload,
                Phase::server_aggregation};
      break;
    case Method::distill_fl:
      phases = {Phase::client_sampling,    Phase::local_update,  Phase::auxiliary_distribution,
                Phase::local_prediction,   Phase::server_aggregation, Phase::global_update,
                Phase::ensemble_distribution, Phase::local_distillation};
      break;
  }
  if (!cfg.local_distill) std::erase(phases, Phase::local_distillation);
  return phases;
}

struct Payload {
  Direction direction;
  PayloadKind kind;
  std::uint64_t elements;
};

// What crosses the wire for one client in one phase.
std::vector<Payload> phase_payloads(const FederationConfig& cfg, const AccountingShape& s, Phase phase,
                                    std::size_t client) {
  const std::uint64_t batch = cfg.synthetic_batch;
  const std::uint64_t data = batch * s.sample_elements;
  const std::uint64_t logits = batch * s.classes;
  const std::uint64_t q = cfg.zo.directions;
  switch (cfg.method) {
    case Method::fedzge:
      if (phase == Phase::distribution) {
        return {{Direction::down, PayloadKind::synthetic_batch, data},
                {Direction::down, PayloadKind::perturbed_batches, q * data}};
      }
      if (phase == Phase::local_prediction) return {{Direction::up, PayloadKind::local_logits, (q + 1) * logits}};
      if (phase == Phase::ensemble_distribution) return {{Direction::down, PayloadKind::ensemble_logits, logits}};
      break;
    case Method::whitebox_datafree:
      if (phase == Phase::distribution) return {{Direction::down, PayloadKind::synthetic_batch, data}};
      if (phase == Phase::local_prediction) {
        return {{Direction::up, PayloadKind::model_parameters, s.client_parameters.at(client)}};
      }
      if (phase == Phase::ensemble_distribution) return {{Direction::down, PayloadKind::ensemble_logits, logits}};
      break;
    case Method::fedavg:
      if (phase == Phase::model_distribution) {
        return {{Direction::down, PayloadKind::model_parameters, s.global_parameters}};
      }
      if (phase == Phase::model_upload) {
        return {{Direction::up, PayloadKind::model_parameters, s.client_parameters.at(client)}};
      }
      break;
    case Method::distill_fl:
      if (phase == Phase::auxiliary_distribution) {
        std::vector<Payload> out{{Direction::down, PayloadKind::auxiliary_data, data}};
        if (cfg.labeled_aux) out.push_back({Direction::down, PayloadKind::auxiliary_labels, batch});
        return out;
      }
      if (phase == Phase::local_prediction) return {{Direction::up, PayloadKind::local_logits, logits}};
      if (phase == Phase::ensemble_distribution) {
        return {{Direction::down, cfg.labeled_aux ? PayloadKind::global_logits : PayloadKind::ensemble_logits,
                 logits}};
      }
      break;
  }
  return {};
}

void record_phase(CommLedger& ledger, const FederationConfig& cfg, const AccountingShape& shape, std::size_t round,
                  std::span<const std::size_t> participants, Phase phase) {
  for (std::size_t k : participants) {
    for (const auto& p : phase_payloads(cfg, shape, phase, k)) {
      ledger.record(round, k, p.direction, p.kind, PayloadShape{p.elements});
    }
  }
}

AccountingShape live_shape(const Federation& fed) {
  return accounting_shape(fed.config, fed.input_dim, fed.classes);
}

EnsembleWeights participant_weights(const Federation& fed, std::span<const std::size_t> ids) {
  std::vector<std::size_t> counts;
  counts.reserve(ids.size());
  for (std::size_t k : ids) counts.push_back(fed.clients[k].sample_count());
  return EnsembleWeights::from_sample_counts(counts);
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// E epochs of full-batch distillation of the global model toward `teacher`.
double distill_global(Federation& fed, const Tensor& x, const Tensor& teacher) {
  auto& cfg = fed.config;
  auto& server = fed.server;
  const double tau = cfg.loss.temperature;
  const double scale = cfg.loss.temperature_squared ? tau * tau : 1.0;
  server.global_model.set_mode(Mode::train);
  std::vector<double> losses;
  for (std::size_t e = 0; e < cfg.global_distill_epochs; ++e) {
    const Tensor student = server.global_model.forward(x);
    losses.push_back(global_distill_loss(teacher, student, tau, cfg.loss.temperature_squared));
    if (cfg.lr_global == 0.0) continue;
    const auto grads = server.global_model.backward(scale * distill_kl_grad(teacher, student, tau).student);
    adam_step(server.global_model.parameters(), grads.params, server.global_optimizer, cfg.lr_global);
  }
  return mean(losses);
}

Tensor global_logits(Network& global, const Tensor& x) {
  global.set_mode(Mode::eval);
  Tensor out = global.forward(x);
  global.set_mode(Mode::train);
  return out;
}

void finish_round(Federation& fed, RoundMetrics& m) {
  m.accuracy = evaluate(fed.server.global_model, fed.test);
  const auto totals = fed.ledger.round_totals(m.round);
  m.bytes_down = totals.down;
  m.bytes_up = totals.up;
}

// Phases shared by FedZGE and its white-box variant after the generator step.
void distill_and_distribute(Federation& fed, RoundMetrics& m, const AccountingShape& shape, const Tensor& x,
                            const Tensor& ens) {
  auto& cfg = fed.config;
  m.global_distill = distill_global(fed, x, ens);
  m.phases.push_back(Phase::global_update);

  record_phase(fed.ledger, cfg, shape, m.round, m.participants, Phase::ensemble_distribution);
  m.phases.push_back(Phase::ensemble_distribution);

  if (cfg.local_distill) {
    std::vector<double> losses(m.participants.size());
    parallel_for(m.participants.size(), [&](std::size_t i) {
      losses[i] = fed.clients[m.participants[i]].local_distill(x, ens, cfg.local_distill_epochs, cfg.lr_local,
                                                              cfg.loss.temperature, cfg.loss.temperature_squared);
    });
    m.local_distill = mean(losses);
    m.phases.push_back(Phase::local_distillation);
  }
}

RoundMetrics begin_round(Federation& fed) {
  auto& cfg = fed.config;
  RoundMetrics m;
  m.round = ++fed.server.round;
  m.participants = sample_clients(cfg.clients, cfg.sampling_fraction, fed.server.sampling_rng);
  m.phases.push_back(Phase::client_sampling);
  return m;
}

void run_local_updates(Federation& fed, RoundMetrics& m) {
  auto& cfg = fed.config;
  parallel_for(m.participants.size(), [&](std::size_t i) {
    local_update(fed.clients[m.participants[i]], cfg.local_epochs, cfg.lr_local, cfg.local_batch);
  });
  m.phases.push_back(Phase::local_update);
}

void check_method(const Federation& fed, Method expected) {
  if (fed.config.method != expected) {
    throw ConfigError("round runner for " + std::string(to_string(expected)) + " called with method " +
                      std::string(to_string(fed.config.method)));
  }
}

std::vector<std::size_t> hidden_scaled(const std::vector<std::size_t>& hidden, double factor) {
  std::vector<std::size_t> out;
  for (std::size_t h : hidden) out.push_back(std::max<std::size_t>(1, static_cast<std::size_t>(h * factor)));
  return out;
}

}  // namespace

std::span<const Phase> fedzge_phase_order() { return kFedzgeOrder; }

void FederationConfig::validate() const {
  if (clients == 0) throw ConfigError("federation.clients: must be at least 1");
  if (!(sampling_fraction > 0.0 && sampling_fraction <= 1.0)) throw ConfigError("federation.sampling_fraction: must be in (0, 1]");
  if (rounds == 0) throw ConfigError("federation.rounds: must be at least 1");
  if (local_epochs == 0) throw ConfigError("federation.local_epochs: must be at least 1");
  if (local_distill_epochs == 0) throw ConfigError("federation.local_distill_epochs: must be at least 1");
  if (global_distill_epochs == 0) throw ConfigError("federation.global_distill_epochs: must be at least 1");
  if (local_batch == 0) throw ConfigError("federation.local_batch: must be at least 1");
  if (synthetic_batch == 0) throw ConfigError("federation.synthetic_batch: must be at least 1");
  if (noise_dim == 0) throw ConfigError("federation.noise_dim: must be at least 1");
  if (lr_local < 0.0) throw ConfigError("federation.lr_local: must be non-negative");
  if (lr_global < 0.0) throw ConfigError("federation.lr_global: must be non-negative");
  if (lr_generator < 0.0) throw ConfigError("federation.lr_generator: must be non-negative");
  if (!(loss.temperature > 0.0)) throw ConfigError("loss.temperature: must be positive");
  if (client_hidden.empty()) throw ConfigError("federation.client_hidden: needs at least one layer");
  if (generator_hidden.empty()) throw ConfigError("federation.generator_hidden: needs at least one layer");
  zo.validate();
}

bool RoundMetrics::operator==(const RoundMetrics& o) const {
  return round == o.round && accuracy == o.accuracy && losses.fidelity == o.losses.fidelity &&
         losses.adversarial == o.losses.adversarial && losses.diversity == o.losses.diversity &&
         losses.information == o.losses.information && global_distill == o.global_distill &&
         local_distill == o.local_distill && bytes_down == o.bytes_down && bytes_up == o.bytes_up &&
         participants == o.participants && phases == o.phases;
}

std::vector<ClassifierSpec> client_specs(const FederationConfig& cfg, std::size_t input_dim, std::size_t classes) {
  std::vector<ClassifierSpec> specs;
  for (std::size_t k = 0; k < cfg.clients; ++k) {
    ClassifierSpec s{input_dim, cfg.client_hidden, classes};
    if (cfg.heterogeneous) {
      const std::size_t slot = (10 * k) / cfg.clients;
      if (slot < 3) {
        s.hidden = hidden_scaled(cfg.client_hidden, 0.5);
      } else if (slot >= 6) {
        s.hidden = cfg.client_hidden;
        s.hidden.push_back(cfg.client_hidden.back());
      }
    }
    specs.push_back(std::move(s));
  }
  return specs;
}

ClassifierSpec global_spec(const FederationConfig& cfg, std::size_t input_dim, std::size_t classes) {
  auto specs = client_specs(cfg, input_dim, classes);
  return *std::max_element(specs.begin(), specs.end(), [](const auto& a, const auto& b) {
    return classifier_parameter_count(a) < classifier_parameter_count(b);
  });
}

ServerState make_server_state(const FederationConfig& cfg, std::size_t input_dim, std::size_t classes) {
  ServerState s;
  s.global_model = build_classifier(global_spec(cfg, input_dim, classes), derive_seed(cfg.seed, "global/init"));
  s.generator = build_generator(GeneratorSpec{cfg.noise_dim, classes, cfg.generator_hidden, input_dim},
                                derive_seed(cfg.seed, "generator/init"));
  s.global_optimizer = AdamState(s.global_model.parameter_count());
  s.generator_optimizer = AdamState(s.generator.parameter_count());
  s.sampling_rng = make_rng(cfg.seed, "server/sampling");
  s.generation_rng = make_rng(cfg.seed, "server/generation");
  s.perturbation_rng = make_rng(cfg.seed, "server/perturbation", cfg.zo.seed);
  s.auxiliary_rng = make_rng(cfg.seed, "server/auxiliary");
  return s;
}

Federation make_federation(const FederationConfig& cfg, std::vector<Client> clients, Dataset test,
                           std::optional<Dataset> auxiliary) {
  cfg.validate();
  if (clients.size() != cfg.clients) throw ConfigError("clients: config says " + std::to_string(cfg.clients) +
                                                       " but " + std::to_string(clients.size()) + " were given");
  if (cfg.method == Method::fedavg && cfg.heterogeneous) {
    throw UnsupportedMethod("fedavg requires homogeneous client architectures");
  }
  if (cfg.method == Method::distill_fl) {
    if (!auxiliary) throw ConfigError("distill_fl: an auxiliary dataset is required");
    if (auxiliary->size() < cfg.synthetic_batch) {
      throw ConfigError("synthetic_batch: auxiliary set has " + std::to_string(auxiliary->size()) +
                        " samples, fewer than the batch size");
    }
  }
  Federation fed;
  fed.config = cfg;
  fed.input_dim = test.dim();
  fed.classes = test.num_classes;
  fed.server = make_server_state(cfg, fed.input_dim, fed.classes);
  fed.clients = std::move(clients);
  fed.test = std::move(test);
  fed.auxiliary = std::move(auxiliary);
  return fed;
}

namespace {

Dataset load_or_make(const std::string& csv, const DataConfig& data, std::size_t per_class, double seed_spread,
                     std::uint64_t seed) {
  if (!csv.empty()) return load_csv(csv, data.classes);
  return make_synthetic(data.classes, data.dim, per_class, seed_spread, seed);
}

}  // namespace

Federation make_federation(const FederationConfig& cfg, const DataConfig& data) {
  cfg.validate();
  if (cfg.method == Method::fedavg && cfg.heterogeneous) {
    throw UnsupportedMethod("fedavg requires homogeneous client architectures");
  }
  const Dataset train = load_or_make(data.train_csv, data, data.train_per_class, data.spread,
                                     derive_seed(cfg.seed, "data/train"));
  Dataset test = load_or_make(data.test_csv, data, data.test_per_class, data.spread, derive_seed(cfg.seed, "data/test"));
  if (test.dim() != train.dim()) throw DataError("test set dimension differs from the training set");
  std::optional<Dataset> aux;
  if (cfg.method == Method::distill_fl) {
    aux = load_or_make(data.aux_csv, data, data.aux_per_class, data.spread, derive_seed(cfg.seed, "data/aux"));
    if (aux->dim() != train.dim()) throw DataError("auxiliary set dimension differs from the training set");
  }
  const auto shards = dirichlet_partition(train, PartitionSpec{cfg.clients, data.alpha, derive_seed(cfg.seed, "partition")});
  const auto specs = client_specs(cfg, train.dim(), train.num_classes);
  const Access access =
      (cfg.method == Method::fedavg || cfg.method == Method::whitebox_datafree) ? Access::white_box : Access::black_box;
  std::vector<Client> clients;
  clients.reserve(cfg.clients);
  for (std::size_t k = 0; k < cfg.clients; ++k) {
    clients.emplace_back(k, shards[k], build_classifier(specs[k], derive_seed(cfg.seed, "client/init", k)), access,
                         derive_seed(cfg.seed, "client/rng", k));
  }
  return make_federation(cfg, std::move(clients), std::move(test), std::move(aux));
}

std::vector<std::size_t> sample_clients(std::size_t clients, double fraction, Rng& rng) {
  if (clients == 0) throw ConfigError("clients: must be at least 1");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("sampling_fraction: must be in (0, 1]");
  // Guard against 0.1 * 50 landing just above 5.
  const double raw = fraction * static_cast<double>(clients);
  auto count = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  count = std::clamp<std::size_t>(count, 1, clients);
  std::vector<std::size_t> ids(clients);
  std::iota(ids.begin(), ids.end(), 0);
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, clients - 1);
    std::swap(ids[i], ids[pick(rng)]);
  }
  ids.resize(count);
  std::sort(ids.begin(), ids.end());
  return ids;
}

double local_update(Client& client, std::size_t epochs, double learning_rate, std::size_t batch_size) {
  return client.local_train(epochs, learning_rate, batch_size);
}

std::vector<Tensor> local_predict(Client& client, const PerturbedBatchSet& batches) {
  std::vector<Tensor> out;
  out.reserve(batches.perturbed.size() + 1);
  out.push_back(client.predict(batches.base));
  for (const auto& p : batches.perturbed) out.push_back(client.predict(p));
  return out;
}

std::vector<Tensor> server_aggregate(const std::vector<std::vector<Tensor>>& per_client,
                                     const EnsembleWeights& weights) {
  if (per_client.empty()) throw Error("server_aggregate: no client outputs");
  const std::size_t batches = per_client.front().size();
  std::vector<Tensor> out;
  out.reserve(batches);
  std::vector<Tensor> column(per_client.size());
  for (std::size_t i = 0; i < batches; ++i) {
    for (std::size_t k = 0; k < per_client.size(); ++k) {
      if (per_client[k].size() != batches) throw ShapeError("server_aggregate: clients sent different batch counts");
      column[k] = per_client[k][i];
    }
    out.push_back(ensemble(column, weights));
  }
  return out;
}

std::vector<double> average_parameters(const std::vector<std::vector<double>>& params,
                                       const EnsembleWeights& weights) {
  if (params.empty() || params.size() != weights.size()) throw ShapeError("average_parameters: count mismatch");
  std::vector<double> out(params.front().size(), 0.0);
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].size() != out.size()) throw ShapeError("average_parameters: parameter length mismatch");
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += weights.values[k] * params[k][j];
  }
  return out;
}

RoundMetrics run_round_fedzge(Federation& fed) {
  check_method(fed, Method::fedzge);
  auto& cfg = fed.config;
  auto& server = fed.server;
  const auto shape = live_shape(fed);
  RoundMetrics m = begin_round(fed);
  run_local_updates(fed, m);

  server.generator.set_mode(Mode::train);
  const SyntheticBatch batch =
      generate(server.generator, cfg.synthetic_batch, fed.classes, cfg.noise_dim, server.generation_rng);
  const PerturbedBatchSet set = make_perturbed_set(batch.samples, cfg.zo, server.perturbation_rng);
  m.phases.push_back(Phase::generation);

  record_phase(fed.ledger, cfg, shape, m.round, m.participants, Phase::distribution);
  m.phases.push_back(Phase::distribution);

  std::vector<std::vector<Tensor>> outputs(m.participants.size());
  parallel_for(m.participants.size(),
               [&](std::size_t i) { outputs[i] = local_predict(fed.clients[m.participants[i]], set); });
  record_phase(fed.ledger, cfg, shape, m.round, m.participants, Phase::local_prediction);
  m.phases.push_back(Phase::local_prediction);

  const auto ens = server_aggregate(outputs, participant_weights(fed, m.participants));
  m.phases.push_back(Phase::server_aggregation);

  const auto base = fd_loss_at(set.base, batch.noise, batch.labels, ens[0], global_logits(server.global_model, set.base),
                               cfg.loss, cfg.mask);
  std::vector<double> perturbed(set.perturbed.size());
  for (std::size_t i = 0; i < set.perturbed.size(); ++i) {
    perturbed[i] = fd_loss_at(set.perturbed[i], batch.noise, batch.labels, ens[i + 1],
                              global_logits(server.global_model, set.perturbed[i]), cfg.loss, cfg.mask)
                       .total;
  }
  const Tensor gx = zo_input_grad(base.total, perturbed, set.directions, cfg.zo);
  const auto gtheta = chain_to_generator(server.generator, gx);
  if (cfg.lr_generator != 0.0) generator_step(server.generator, gtheta, server.generator_optimizer, cfg.lr_generator);
  m.losses = base.parts;
  m.phases.push_back(Phase::generator_update);

  distill_and_distribute(fed, m, shape, set.base, ens[0]);
  finish_round(fed, m);
  return m;
}

RoundMetrics run_round_whitebox(Federation& fed) {
  check_method(fed, Method::whitebox_datafree);
  auto& cfg = fed.config;
  auto& server = fed.server;
  const auto shape = live_shape(fed);
  RoundMetrics m = begin_round(fed);
  run_local_updates(fed, m);

  server.generator.set_mode(Mode::train);
  const SyntheticBatch batch =
      generate(server.generator, cfg.synthetic_batch, fed.classes, cfg.noise_dim, server.generation_rng);
  m.phases.push_back(Phase::generation);

  record_phase(fed.ledger, cfg, shape, m.round, m.participants, Phase::distribution);
  m.phases.push_back(Phase::distribution);

  std::vector<Network> models;
  models.reserve(m.participants.size());
  for (std::size_t k : m.participants) models.push_back(fed.clients[k].upload_model());
  record_phase(fed.ledger, cfg, shape, m.round, m.participants, Phase::local_prediction);
  m.phases.push_back(Phase::local_prediction);

  const auto weights = participant_weights(fed, m.participants);
  std::vector<std::vector<Tensor>> outputs(models.size());
  parallel_for(models.size(), [&](std::size_t i) {
    models[i].set_mode(Mode::eval);
    outputs[i] = {models[i].forward(batch.samples)};
  });
  const Tensor ens = server_aggregate(outputs, weights)[0];
  m.phases.push_back(Phase::server_aggregation);

  m.losses = fd_loss_at(batch.samples, batch.noise, batch.labels, ens,
                        global_logits(server.global_model, batch.samples), cfg.loss, cfg.mask)
                 .parts;
  server.global_model.set_mode(Mode::eval);
  const Tensor gx = true_input_grad(models, weights, server.global_model, batch.samples, batch.noise, batch.labels,
                                    cfg.loss, cfg.mask);
  server.global_model.set_mode(Mode::train);
  const auto gtheta = chain_to_generator(server.generator, gx);
  if (cfg.lr_generator != 0.0) generator_step(server.generator, gtheta, server.generator_optimizer, cfg.lr_generator);
  m.phases.push_back(Phase::generator_update);

  distill_and_distribute(fed, m, shape, batch.samples, ens);
  finish_round(fed, m);
  return m;
}

RoundMetrics run_round_fedavg(Federation& fed) {
  check_method(fed, Method::fedavg);
  auto& cfg = fed.config;
  if (cfg.heterogeneous) throw UnsupportedMethod("fedavg requires homogeneous client architectures");
  auto& server = fed.server;
  const auto shape = live_shape(fed);
  RoundMetrics m = begin_round(fed);

  for (std::size_t k : m.participants) fed.clients[k].download_parameters(server.global_model.parameters());
  record_phase(fed.ledger, cfg, shape, m.round, m.participants, Phase::model_distribution);
  m.phases.push_back(Phase::model_distribution);

  run_local_updates(fed, m);

  std::vector<std::vector<double>> params;
  for (std::size_t k : m.participants) {
    const Network uploaded = fed.clients[k].upload_model();
    params.emplace_back(uploaded.parameters().begin(), uploaded.parameters().end());
  }
  record_phase(fed.ledger, cfg, shape, m.round, m.participants, Phase::model_upload);
  m.phases.push_back(Phase::model_upload);

  const auto averaged = average_parameters(params, participant_weights(fed, m.participants));
  std::copy(averaged.begin(), averaged.end(), server.global_model.parameters().begin());
  m.phases.push_back(Phase::server_aggregation);

  finish_round(fed, m);
  return m;
}

RoundMetrics run_round_distill_fl(Federation& fed) {
  check_method(fed, Method::distill_fl);
  auto& cfg = fed.config;
  auto& server = fed.server;
  if (!fed.auxiliary) throw ConfigError("distill_fl: an auxiliary dataset is required");
  const auto shape = live_shape(fed);
  RoundMetrics m = begin_round(fed);
  run_local_updates(fed, m);

  std::vector<std::size_t> order(fed.auxiliary->size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), server.auxiliary_rng);
  order.resize(cfg.synthetic_batch);
  const Dataset aux = fed.auxiliary->subset(order);
  record_phase(fed.ledger, cfg, shape, m.round, m.participants, Phase::auxiliary_distribution);
  m.phases.push_back(Phase::auxiliary_distribution);

  std::vector<std::vector<Tensor>> outputs(m.participants.size());
  parallel_for(m.participants.size(),
               [&](std::size_t i) { outputs[i] = {fed.clients[m.participants[i]].predict(aux.samples)}; });
  record_phase(fed.ledger, cfg, shape, m.round, m.participants, Phase::local_prediction);
  m.phases.push_back(Phase::local_prediction);

  const Tensor ens = server_aggregate(outputs, participant_weights(fed, m.participants))[0];
  m.phases.push_back(Phase::server_aggregation);

  m.global_distill = distill_global(fed, aux.samples, ens);
  m.phases.push_back(Phase::global_update);

  const Tensor teacher = cfg.labeled_aux ? global_logits(server.global_model, aux.samples) : ens;
  record_phase(fed.ledger, cfg, shape, m.round, m.participants, Phase::ensemble_distribution);
  m.phases.push_back(Phase::ensemble_distribution);

  if (cfg.local_distill) {
    std::vector<double> losses(m.participants.size());
    parallel_for(m.participants.size(), [&](std::size_t i) {
      auto& c = fed.clients[m.participants[i]];
      losses[i] = cfg.labeled_aux
                      ? c.local_distill_labeled(aux.samples, aux.labels, teacher, cfg.local_distill_epochs,
                                                cfg.lr_local, cfg.loss.temperature, cfg.loss.temperature_squared)
                      : c.local_distill(aux.samples, teacher, cfg.local_distill_epochs, cfg.lr_local,
                                        cfg.loss.temperature, cfg.loss.temperature_squared);
    });
    m.local_distill = mean(losses);
    m.phases.push_back(Phase::local_distillation);
  }

  finish_round(fed, m);
  return m;
}

RoundMetrics run_round(Federation& fed) {
  switch (fed.config.method) {
    case Method::fedzge: return run_round_fedzge(fed);
    case Method::whitebox_datafree: return run_round_whitebox(fed);
    case Method::fedavg: return run_round_fedavg(fed);
    case Method::distill_fl: return run_round_distill_fl(fed);
  }
  throw UnsupportedMethod("unknown method");
}

double synthetic_class_entropy(Federation& fed) {
  auto& cfg = fed.config;
  Rng rng = make_rng(cfg.seed, "probe/entropy");
  fed.server.generator.set_mode(Mode::eval);
  const SyntheticBatch batch = generate(fed.server.generator, cfg.synthetic_batch, fed.classes, cfg.noise_dim, rng);
  fed.server.generator.set_mode(Mode::train);
  std::vector<std::vector<Tensor>> outputs(fed.clients.size());
  parallel_for(fed.clients.size(), [&](std::size_t k) { outputs[k] = {fed.clients[k].predict(batch.samples)}; });
  std::vector<std::size_t> all(fed.clients.size());
  std::iota(all.begin(), all.end(), 0);
  const Tensor ens = server_aggregate(outputs, participant_weights(fed, all))[0];
  std::vector<double> hist(fed.classes, 0.0);
  for (int c : argmax_rows(ens)) hist[static_cast<std::size_t>(c)] += 1.0;
  double h = 0.0;
  for (double n : hist) {
    if (n == 0.0) continue;
    const double p = n / static_cast<double>(batch.labels.size());
    h -= p * std::log(p);
  }
  return h;
}

RunResult run_rounds(Federation& fed) {
  RunResult r;
  r.seed = fed.config.seed;
  for (std::size_t t = 0; t < fed.config.rounds; ++t) {
    r.rounds.push_back(run_round(fed));
    log(LogLevel::info, std::string(to_string(fed.config.method)) + " seed " + std::to_string(r.seed) + " round " +
                            std::to_string(r.rounds.back().round) + " accuracy " +
                            std::to_string(r.rounds.back().accuracy));
  }
  r.final_accuracy = r.rounds.empty() ? 0.0 : r.rounds.back().accuracy;
  if (fed.config.method == Method::fedzge || fed.config.method == Method::whitebox_datafree) {
    r.class_entropy = synthetic_class_entropy(fed);
  }
  r.ledger = fed.ledger;
  return r;
}

namespace {

RunResult run_as(FederationConfig cfg, const DataConfig& data, Method method) {
  cfg.method = method;
  Federation fed = make_federation(cfg, data);
  return run_rounds(fed);
}

}  // namespace

RunResult run_fedzge(const FederationConfig& cfg, const DataConfig& data) { return run_as(cfg, data, Method::fedzge); }

RunResult run_whitebox_datafree(const FederationConfig& cfg, const DataConfig& data) {
  return run_as(cfg, data, Method::whitebox_datafree);
}

RunResult run_fedavg(const FederationConfig& cfg, const DataConfig& data) {
  if (cfg.heterogeneous) throw UnsupportedMethod("fedavg requires homogeneous client architectures");
  return run_as(cfg, data, Method::fedavg);
}

RunResult run_distill_fl(const FederationConfig& cfg, const DataConfig& data, std::optional<Dataset> auxiliary) {
  FederationConfig c = cfg;
  c.method = Method::distill_fl;
  Federation fed = make_federation(c, data);
  if (auxiliary) {
    fed = make_federation(c, std::move(fed.clients), std::move(fed.test), std::move(auxiliary));
  }
  return run_rounds(fed);
}

RunResult run_method(const FederationConfig& cfg, const DataConfig& data) {
  switch (cfg.method) {
    case Method::fedzge: return run_fedzge(cfg, data);
    case Method::whitebox_datafree: return run_whitebox_datafree(cfg, data);
    case Method::fedavg: return run_fedavg(cfg, data);
    case Method::distill_fl: return run_distill_fl(cfg, data);
  }
  throw UnsupportedMethod("unknown method");
}

std::vector<double> local_only_accuracies(const FederationConfig& cfg, const DataConfig& data) {
  FederationConfig c = cfg;
  c.method = Method::fedzge;
  Federation fed = make_federation(c, data);
  std::vector<double> acc(fed.clients.size());
  parallel_for(fed.clients.size(), [&](std::size_t k) {
    fed.clients[k].local_train(c.rounds * c.local_epochs, c.lr_local, c.local_batch);
    acc[k] = fed.clients[k].evaluate_on(fed.test);
  });
  return acc;
}

AccountingShape accounting_shape(const FederationConfig& cfg, std::size_t input_dim, std::size_t classes) {
  AccountingShape s;
  s.sample_elements = input_dim;
  s.classes = classes;
  for (const auto& spec : client_specs(cfg, input_dim, classes)) {
    s.client_parameters.push_back(classifier_parameter_count(spec));
  }
  s.global_parameters = classifier_parameter_count(global_spec(cfg, input_dim, classes));
  return s;
}

CommLedger schedule_ledger(const FederationConfig& cfg, const AccountingShape& shape) {
  cfg.validate();
  if (cfg.method == Method::fedavg && cfg.heterogeneous) {
    throw UnsupportedMethod("fedavg requires homogeneous client architectures");
  }
  if (shape.client_parameters.size() != cfg.clients &&
      (cfg.method == Method::fedavg || cfg.method == Method::whitebox_datafree)) {
    throw ConfigError("accounting shape: expected one parameter count per client");
  }
  CommLedger ledger;
  Rng sampling = make_rng(cfg.seed, "server/sampling");
  const auto phases = method_phases(cfg);
  for (std::size_t t = 1; t <= cfg.rounds; ++t) {
    const auto ids = sample_clients(cfg.clients, cfg.sampling_fraction, sampling);
    for (Phase p : phases) record_phase(ledger, cfg, shape, t, ids, p);
  }
  return ledger;
}

}  // namespace fedzge
