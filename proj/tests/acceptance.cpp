// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "fedzge/comms.hpp"
#include "fedzge/experiment.hpp"
#include "fedzge/federation.hpp"
#include "fedzge/losses.hpp"
#include "fedzge/log.hpp"
#include "fedzge/zo_grad.hpp"
#include "support.hpp"

using namespace fedzge;
using namespace fedzge::test;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
  void info(const std::string& what) { notes.push_back("info " + what); }
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string list(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : " ") + fmt("%.4f", x);
  return s;
}

// ---------------------------------------------------------------- 1 and 2

constexpr std::uint64_t kImage = 3 * 32 * 32;

std::string table_gib(CommMethod m, std::uint64_t classes, std::uint64_t q) {
  return format_gib(formula_bytes(batch_payload_spec(m, 100, 10, q, 500, kImage, classes)).total());
}

// The live ledger at image shapes, replayed without training.
std::string ledger_gib(Method method, bool labeled, std::size_t classes, std::size_t q) {
  FederationConfig cfg;
  cfg.method = method;
  cfg.labeled_aux = labeled;
  cfg.zo.directions = q;
  return format_gib(schedule_ledger(cfg, accounting_shape(cfg, kImage, classes)).totals().total());
}

Verdict criterion1() {
  Verdict v;
  struct Row {
    std::string name;
    CommMethod formula;
    Method method;
    bool labeled;
    std::uint64_t classes;
    std::uint64_t q;
    std::string expected;
  };
  const std::vector<Row> rows{
      {"FedZGE C=10", CommMethod::fedzge, Method::fedzge, true, 10, 10, "63.17"},
      {"FedZGE C=100", CommMethod::fedzge, Method::fedzge, true, 100, 10, "65.18"},
      {"FedZGE q=1 C=10", CommMethod::fedzge, Method::fedzge, true, 10, 1, "11.50"},
      {"FedZGE q=5 C=10", CommMethod::fedzge, Method::fedzge, true, 10, 5, "34.46"},
      {"FedZGE q=20 C=10", CommMethod::fedzge, Method::fedzge, true, 10, 20, "120.57"},
      {"FedZGE q=1 C=100", CommMethod::fedzge, Method::fedzge, true, 100, 1, "12.00"},
      {"FedZGE q=5 C=100", CommMethod::fedzge, Method::fedzge, true, 100, 5, "35.64"},
      {"FedZGE q=20 C=100", CommMethod::fedzge, Method::fedzge, true, 100, 20, "124.26"},
      {"MHAT C=10", CommMethod::mhat, Method::distill_fl, true, 10, 10, "5.76"},
      {"DS-FL C=10", CommMethod::dsfl, Method::distill_fl, false, 10, 10, "5.76"},
  };
  for (const auto& r : rows) {
    const auto f = table_gib(r.formula, r.classes, r.q);
    const auto l = ledger_gib(r.method, r.labeled, r.classes, r.q);
    v.check(f == r.expected && l == r.expected,
            fmt("%-18s formula %s ledger %s expected %s", r.name.c_str(), f.c_str(), l.c_str(), r.expected.c_str()));
  }
  return v;
}

Verdict criterion2() {
  Verdict v;
  const std::uint64_t params = 11173962;  // ResNet-18, 10-way head
  MethodCommSpec s;
  s.method = CommMethod::fedavg;
  s.rounds = 100;
  s.clients = 10;
  s.global_model = PayloadShape{params};
  s.local_model = PayloadShape{params};
  const double gib = to_gib(formula_bytes(s).total());
  v.check(gib >= 83.2 && gib <= 83.4, fmt("formula %.4f GiB for %llu parameters, band [83.2, 83.4]", gib,
                                          static_cast<unsigned long long>(params)));

  FederationConfig cfg;
  cfg.method = Method::fedavg;
  AccountingShape shape;
  shape.sample_elements = kImage;
  shape.classes = 10;
  shape.client_parameters.assign(10, params);
  shape.global_parameters = params;
  const double ledger = to_gib(schedule_ledger(cfg, shape).totals().total());
  v.check(ledger == gib, fmt("ledger %.4f GiB", ledger));
  return v;
}

// ---------------------------------------------------------------- 3

double err_of(std::span<const double> analytic, const std::function<double(std::span<const double>)>& f,
              const std::vector<double>& x) {
  return rel_err(analytic, fd_gradient(f, x));
}

// Parameter and input gradients of <R, net(x)> against central differences.
std::pair<double, double> layer_errors(Network net, const Tensor& x, std::span<const int> labels, Rng& rng) {
  const Tensor out = net.forward(x, labels);
  const Tensor r = random_tensor(out.rows(), out.cols(), rng);
  const Gradients g = net.backward(r);
  auto objective = [&](Network& n, const Tensor& in) { return dot(r.data(), n.forward(in, labels).data()); };
  const double ep = err_of(
      g.params,
      [&](std::span<const double> p) {
        Network copy = net;
        std::copy(p.begin(), p.end(), copy.parameters().begin());
        return objective(copy, x);
      },
      to_vector(net.parameters()));
  const double ex = err_of(
      g.input.data(),
      [&](std::span<const double> in) {
        Network copy = net;
        return objective(copy, Tensor(x.shape(), to_vector(in)));
      },
      to_vector(x.data()));
  return {ep, ex};
}

Verdict criterion3() {
  Verdict v;
  constexpr double tol = 1e-5;
  Rng rng(3);
  auto randomize = [&](Network& n) {
    for (auto& p : n.parameters()) p = std::normal_distribution<double>(0.0, 0.8)(rng);
  };

  // Layers.
  for (auto [kind, name] : {std::pair{ActivationKind::relu, "relu"}, std::pair{ActivationKind::leaky_relu, "leaky_relu"},
                            std::pair{ActivationKind::tanh, "tanh"}}) {
    Network n;
    n.add(Dense{4, 6});
    n.add(Activation{kind});
    n.add(Dense{6, 3});
    randomize(n);
    const auto [ep, ex] = layer_errors(n, random_tensor(5, 4, rng), {}, rng);
    v.check(ep <= tol && ex <= tol, fmt("dense+%s params %.2e input %.2e", name, ep, ex));
  }
  {
    Network n;
    n.add(Dense{4, 6});
    n.add(BatchNorm1d{6});
    n.add(Activation{ActivationKind::tanh});
    randomize(n);
    const auto [ep, ex] = layer_errors(n, random_tensor(7, 4, rng), {}, rng);
    v.check(ep <= tol && ex <= tol, fmt("batchnorm (train) params %.2e input %.2e", ep, ex));
    n.forward(random_tensor(16, 4, rng));
    n.set_mode(Mode::eval);
    const auto [ep2, ex2] = layer_errors(n, random_tensor(3, 4, rng), {}, rng);
    v.check(ep2 <= tol && ex2 <= tol, fmt("batchnorm (eval) params %.2e input %.2e", ep2, ex2));
  }
  {
    Network g = build_generator({3, 4, {6, 5}, 4}, 31);
    const std::vector<int> labels{0, 3, 1, 2, 3, 0};
    const auto [ep, ex] = layer_errors(g, random_tensor(6, 3, rng), labels, rng);
    v.check(ep <= tol && ex <= tol, fmt("generator (embedding, dense, batchnorm, leaky, tanh) params %.2e input %.2e",
                                        ep, ex));
  }

  // Losses with respect to logits / samples.
  const std::size_t b = 6;
  const std::size_t c = 4;
  const Tensor t = random_tensor(b, c, rng, 2.0);
  const Tensor s = random_tensor(b, c, rng, 2.0);
  const std::vector<int> labels{0, 1, 2, 3, 1, 2};
  auto as = [&](std::span<const double> in, const Tensor& like) { return Tensor(like.shape(), to_vector(in)); };
  {
    const double e = err_of(cross_entropy_grad(t, labels).data(),
                            [&](auto in) { return cross_entropy(as(in, t), labels); }, to_vector(t.data()));
    v.check(e <= tol, fmt("cross entropy (fidelity) %.2e", e));
  }
  for (bool sq : {false, true}) {
    const double tau = 3.0;
    const double scale = sq ? tau * tau : 1.0;
    const auto g = distill_kl_grad(t, s, tau);
    const double et = err_of((scale * g.teacher).data(),
                             [&](auto in) { return global_distill_loss(as(in, t), s, tau, sq); }, to_vector(t.data()));
    const double es = err_of((scale * g.student).data(),
                             [&](auto in) { return local_distill_loss(t, as(in, s), tau, sq); }, to_vector(s.data()));
    const double ea = err_of((-scale * g.teacher).data(),
                             [&](auto in) { return adversarial_loss(as(in, t), s, tau, sq); }, to_vector(t.data()));
    v.check(et <= tol && es <= tol && ea <= tol,
            fmt("distillation KL%s teacher %.2e student %.2e adversarial %.2e", sq ? " (tau^2)" : "", et, es, ea));
  }
  {
    const Tensor x = random_tensor(b, 5, rng);
    const Tensor z = random_tensor(b, 3, rng);
    const double e = err_of(diversity_loss_grad(x, z).data(), [&](auto in) { return diversity_loss(as(in, x), z); },
                            to_vector(x.data()));
    v.check(e <= tol, fmt("diversity %.2e", e));
  }
  {
    const double e = err_of(info_entropy_loss_grad(t).data(),
                            [&](auto in) { return info_entropy_loss(class_frequency(as(in, t))); },
                            to_vector(t.data()));
    v.check(e <= tol, fmt("information entropy %.2e", e));
  }

  // Whole generator objective through the client models, and the chain into
  // the generator parameters.
  std::vector<Network> locals{build_classifier({4, {6}, c, ActivationKind::tanh}, 41),
                              build_classifier({4, {5}, c, ActivationKind::tanh}, 42)};
  Network global = build_classifier({4, {7}, c, ActivationKind::tanh}, 43);
  const auto weights = EnsembleWeights::from_sample_counts(std::vector<std::size_t>{40, 60});
  Network gen = build_generator({3, c, {8}, 4}, 44);
  Rng grng(45);
  const SyntheticBatch batch = generate(gen, b, c, 3, grng);
  const LossWeights lw;
  const LossMask mask;
  auto objective = [&](const Tensor& x) {
    std::vector<Tensor> logits;
    for (auto& n : locals) logits.push_back(n.forward(x));
    return fd_loss_at(x, batch.noise, batch.labels, ensemble(logits, weights), global.forward(x), lw, mask).total;
  };
  const Tensor gx = true_input_grad(locals, weights, global, batch.samples, batch.noise, batch.labels, lw, mask);
  const double e_in = err_of(gx.data(), [&](auto in) { return objective(as(in, batch.samples)); },
                             to_vector(batch.samples.data()));
  v.check(e_in <= tol, fmt("generator objective wrt samples %.2e", e_in));

  gen.forward(batch.noise, batch.labels);
  const auto chained = chain_to_generator(gen, gx);
  // End-to-end: the same objective differentiated through composite
  // generator+model networks.
  std::vector<Tensor> logits;
  for (auto& n : locals) logits.push_back(n.forward(batch.samples));
  const Tensor ens = ensemble(logits, weights);
  const Tensor glob = global.forward(batch.samples);
  Tensor d_ens = cross_entropy_grad(ens, batch.labels);
  const auto kd = distill_kl_grad(ens, glob, lw.temperature);
  axpy(-1.0, kd.teacher, d_ens);
  axpy(1.0, info_entropy_loss_grad(ens), d_ens);
  std::vector<double> direct(gen.parameter_count(), 0.0);
  auto through = [&](const Network* tail, const Tensor& up, double w) {
    Network comp = gen;
    if (tail) comp.append(*tail);
    comp.forward(batch.noise, batch.labels);
    const auto g = comp.backward(up);
    for (std::size_t i = 0; i < direct.size(); ++i) direct[i] += w * g.params[i];
  };
  for (std::size_t k = 0; k < locals.size(); ++k) through(&locals[k], d_ens, weights.values[k]);
  through(&global, -1.0 * kd.student, 1.0);
  through(nullptr, diversity_loss_grad(batch.samples, batch.noise), 1.0);
  const double e_chain = rel_err(chained, direct);
  v.check(e_chain <= 1e-10, fmt("chain_to_generator vs end-to-end backprop %.2e (<= 1e-10)", e_chain));

  // And the generator-parameter gradient itself against differences.
  const double e_theta = err_of(
      chained,
      [&](std::span<const double> p) {
        Network copy = gen;
        std::copy(p.begin(), p.end(), copy.parameters().begin());
        return objective(copy.forward(batch.noise, batch.labels));
      },
      to_vector(gen.parameters()));
  v.check(e_theta <= tol, fmt("generator objective wrt generator parameters %.2e", e_theta));
  return v;
}

// ---------------------------------------------------------------- 4

Verdict criterion4() {
  Verdict v;
  Rng rng(4);
  auto linear = [](const Tensor& a, const Tensor& x) { return dot(a.data(), x.data()) / double(x.rows()); };
  {
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      const Tensor a = random_tensor(3, 8, rng);
      const Tensor x = random_tensor(3, 8, rng);
      ZOConfig cfg;
      cfg.directions = 1;
      const auto set = make_perturbed_set(x, cfg, rng);
      const Tensor g = zo_input_grad(linear(a, x), std::vector<double>{linear(a, set.perturbed[0])},
                                     set.directions, cfg);
      // d <grad L, u> u with grad L = a / B and d = 8 per-sample features.
      const double proj = 8.0 * dot(a.data(), set.directions[0].data()) / 3.0;
      for (std::size_t j = 0; j < g.size(); ++j) worst = std::max(worst, std::abs(g[j] - proj * set.directions[0][j]));
    }
    v.check(worst <= 1e-9, fmt("(a) linear loss, q=1: max abs deviation %.2e (<= 1e-9)", worst));
  }
  {
    const std::size_t dim = 16;
    const int draws = 20000;
    const Tensor a = random_tensor(1, dim, rng);
    const Tensor x = random_tensor(1, dim, rng);
    ZOConfig cfg;
    Tensor acc({1, dim});
    for (int t = 0; t < draws; ++t) {
      const auto set = make_perturbed_set(x, cfg, rng);
      std::vector<double> losses;
      for (const auto& p : set.perturbed) losses.push_back(linear(a, p));
      axpy(1.0 / draws, zo_input_grad(linear(a, x), losses, set.directions, cfg), acc);
    }
    const double e = rel_err(acc.data(), (double(dim) * a).data());
    v.check(e <= 0.05, fmt("(b) gaussian expectation vs d * gradient over %d draws (d=16, q=10): rel err %.4f", draws, e));
  }
  {
    const std::size_t dim = 32;
    const int trials = 200;
    const Tensor x = random_tensor(1, dim, rng);
    auto quad = [](const Tensor& y) { return 0.5 * dot(y.data(), y.data()); };
    ZOConfig cfg;
    Tensor acc({1, dim});
    double per_trial = 0.0;
    for (int t = 0; t < trials; ++t) {
      const auto set = make_perturbed_set(x, cfg, rng);
      std::vector<double> losses;
      for (const auto& p : set.perturbed) losses.push_back(quad(p));
      const Tensor g = zo_input_grad(quad(x), losses, set.directions, cfg);
      per_trial += dot(g.data(), x.data()) / (norm2(g.data()) * norm2(x.data())) / trials;
      axpy(1.0 / trials, g, acc);
    }
    const double cos = dot(acc.data(), x.data()) / (norm2(acc.data()) * norm2(x.data()));
    v.check(cos >= 0.5, fmt("(c) quadratic loss, d=32, q=10: cosine of the %d-trial mean estimate %.4f (>= 0.5)",
                            trials, cos));
    v.info(fmt("(c) mean per-trial cosine %.4f (single-estimate alignment, about sqrt(q/(d+q)))", per_trial));
  }
  return v;
}

// ---------------------------------------------------------------- 5, 6, 7

FederationConfig desk_config() {
  FederationConfig f;
  f.clients = 5;
  f.rounds = 30;
  f.synthetic_batch = 128;
  f.zo.directions = 10;
  return f;
}

DataConfig desk_data(double alpha) {
  DataConfig d;
  d.classes = 4;
  d.dim = 16;
  d.train_per_class = 500;
  d.test_per_class = 200;
  d.spread = 1.5;
  d.alpha = alpha;
  return d;
}

constexpr int kSeeds = 5;

struct DeskRuns {
  std::vector<RunResult> zge_low;   // alpha 0.1
  std::vector<RunResult> zge_high;  // alpha 1
  std::vector<RunResult> whitebox;  // alpha 0.1
  std::vector<double> best_local;   // alpha 0.1
};

std::vector<double> accuracies(const std::vector<RunResult>& runs) {
  std::vector<double> out;
  for (const auto& r : runs) out.push_back(r.final_accuracy);
  return out;
}

std::vector<double> entropies(const std::vector<RunResult>& runs) {
  std::vector<double> out;
  for (const auto& r : runs) out.push_back(r.class_entropy.value_or(0.0));
  return out;
}

std::vector<RunResult> over_seeds(const FederationConfig& base, const DataConfig& data) {
  std::vector<RunResult> out(kSeeds);
  run_jobs(kSeeds, 1, [&](std::size_t s) {
    FederationConfig f = base;
    f.seed = s;
    out[s] = run_method(f, data);
  });
  return out;
}

DeskRuns desk_runs() {
  DeskRuns r;
  auto f = desk_config();
  r.zge_low = over_seeds(f, desk_data(0.1));
  r.zge_high = over_seeds(f, desk_data(1.0));
  f.method = Method::whitebox_datafree;
  r.whitebox = over_seeds(f, desk_data(0.1));
  for (int s = 0; s < kSeeds; ++s) {
    auto lf = desk_config();
    lf.seed = static_cast<std::uint64_t>(s);
    const auto acc = local_only_accuracies(lf, desk_data(0.1));
    r.best_local.push_back(*std::max_element(acc.begin(), acc.end()));
  }
  return r;
}

Verdict criterion5(const DeskRuns& r) {
  Verdict v;
  const auto low = accuracies(r.zge_low);
  const auto high = accuracies(r.zge_high);
  const auto wb = accuracies(r.whitebox);
  v.info("FedZGE alpha=0.1 per seed: " + list(low));
  v.info("FedZGE alpha=1   per seed: " + list(high));
  v.info("white-box alpha=0.1 per seed: " + list(wb));
  v.info("best local-only alpha=0.1 per seed: " + list(r.best_local));
  v.check(mean(low) > mean(r.best_local),
          fmt("(a) FedZGE %.4f > best local-only client %.4f (alpha=0.1, 5-seed means)", mean(low), mean(r.best_local)));
  v.check(mean(low) >= 0.9 * mean(wb), fmt("(b) FedZGE / white-box = %.4f / %.4f = %.3f (>= 0.9)", mean(low), mean(wb),
                                           mean(low) / mean(wb)));
  v.check(mean(high) >= mean(low), fmt("(c) mean accuracy alpha=1 %.4f >= alpha=0.1 %.4f", mean(high), mean(low)));
  return v;
}

Verdict criterion6(const DeskRuns& r) {
  Verdict v;
  struct Flag {
    const char* name;
    LossMask mask;
    bool local_distill;
  };
  const std::vector<Flag> flags{{"fid", LossMask::fidelity_only(), true},
                                {"adv", {true, false, true, true}, true},
                                {"div", {true, true, false, true}, true},
                                {"info", {true, true, true, false}, true},
                                {"localdistill", {}, false}};
  for (const auto& flag : flags) {
    auto f = desk_config();
    f.mask = flag.mask;
    f.local_distill = flag.local_distill;
    const RunResult run = run_fedzge(f, desk_data(0.1));
    bool zero = true;
    bool active = true;
    for (const auto& m : run.rounds) {
      const double terms[] = {m.losses.fidelity, m.losses.adversarial, m.losses.diversity, m.losses.information};
      const bool on[] = {flag.mask.fidelity, flag.mask.adversarial, flag.mask.diversity, flag.mask.information};
      for (int i = 0; i < 4; ++i) {
        if (!on[i] && terms[i] != 0.0) zero = false;
        if (on[i] && terms[i] == 0.0) active = false;
      }
      if (!flag.local_distill) {
        if (m.local_distill != 0.0) zero = false;
        if (std::find(m.phases.begin(), m.phases.end(), Phase::local_distillation) != m.phases.end()) zero = false;
      }
    }
    v.check(zero && active, fmt("--ablate %-12s masked terms zero in all %zu rounds, others active, final acc %.4f",
                                flag.name, run.rounds.size(), run.final_accuracy));
  }
  auto f = desk_config();
  f.mask = LossMask::fidelity_only();
  const auto fid = accuracies(over_seeds(f, desk_data(0.1)));
  const double full = mean(accuracies(r.zge_low));
  v.info(fmt("smoke: full %.4f vs fidelity-only %.4f (alpha=0.1, 5-seed means) -> %s", full, mean(fid),
             full >= mean(fid) ? "full >= fid-only" : "full < fid-only"));
  return v;
}

Verdict criterion7(const DeskRuns& r) {
  Verdict v;
  const double bound = 0.9 * std::log(4.0);
  const auto low = entropies(r.zge_low);
  const auto high = entropies(r.zge_high);
  v.info("entropy alpha=0.1 per seed: " + list(low));
  v.info("entropy alpha=1   per seed: " + list(high));
  v.check(mean(low) >= bound, fmt("beta3=1, alpha=0.1: mean entropy %.4f >= 0.9 ln 4 = %.4f", mean(low), bound));
  v.check(mean(high) >= bound, fmt("beta3=1, alpha=1:   mean entropy %.4f >= %.4f", mean(high), bound));
  auto f = desk_config();
  f.loss.information = 0.0;
  const auto off = entropies(over_seeds(f, desk_data(0.1)));
  v.info(fmt("beta3=0, alpha=0.1: mean entropy %.4f (not gated), per seed %s", mean(off), list(off).c_str()));
  return v;
}

// ---------------------------------------------------------------- 8

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict criterion8() {
  Verdict v;
  ExperimentConfig cfg;
  cfg.federation = desk_config();
  cfg.federation.rounds = 5;
  cfg.data = desk_data(0.1);
  cfg.seeds = {0, 1, 2};
  cfg.out_dir = "out";

  const auto serial = run_experiment(cfg);
  std::size_t params = 0;
  bool order = true;
  for (const auto& run : serial.runs) {
    for (const auto& e : run.ledger.entries()) params += is_parameter_payload(e.kind);
    for (const auto& m : run.rounds) order = order && std::ranges::equal(m.phases, fedzge_phase_order());
  }
  v.check(params == 0, fmt("parameter-class payloads in FedZGE ledgers: %zu", params));
  v.check(order, "every round follows client_sampling, local_update, generation, distribution, local_prediction, "
                 "server_aggregation, generator_update, global_update, ensemble_distribution, local_distillation");

  const fs::path root = fs::temp_directory_path() / "fedzge-acceptance";
  fs::remove_all(root);
  write_outputs(cfg, serial, root / "a");
  write_outputs(cfg, run_experiment(cfg), root / "b");
  ExperimentConfig par = cfg;
  par.parallel = 3;
  write_outputs(cfg, run_experiment(par), root / "c");
  const int threads = omp_get_max_threads();
  omp_set_num_threads(4);
  write_outputs(cfg, run_experiment(cfg), root / "d");
  omp_set_num_threads(threads);

  std::size_t files = 0;
  bool same_rerun = true;
  bool same_parallel = true;
  bool same_threads = true;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    const auto name = entry.path().filename();
    const auto a = slurp(entry.path());
    same_rerun = same_rerun && a == slurp(root / "b" / name);
    same_parallel = same_parallel && a == slurp(root / "c" / name);
    same_threads = same_threads && a == slurp(root / "d" / name);
    ++files;
  }
  v.check(same_rerun, fmt("rerun with identical seeds: %zu output files byte-identical", files));
  v.check(same_parallel, "seeds run concurrently (parallel=3): byte-identical");
  v.check(same_threads, "4 OpenMP threads: byte-identical");
  fs::remove_all(root);
  return v;
}

}  // namespace

int main() {
  set_log_level(LogLevel::warn);
  int failed = 0;
  auto report = [&](int n, const char* title, const Verdict& v) {
    std::printf("%s criterion %d: %s\n", v.pass ? "PASS" : "FAIL", n, title);
    for (const auto& note : v.notes) std::printf("    %s\n", note.c_str());
    std::fflush(stdout);
    failed += !v.pass;
  };
  report(1, "communication accounting", criterion1());
  report(2, "FedAvg accounting", criterion2());
  report(3, "gradient correctness", criterion3());
  report(4, "zeroth-order estimator calibration", criterion4());
  const DeskRuns desk = desk_runs();
  report(5, "desk-scale trends", criterion5(desk));
  report(6, "ablation plumbing", criterion6(desk));
  report(7, "class balance of synthetic data", criterion7(desk));
  report(8, "protocol invariants", criterion8());
  std::printf("%d of 8 criteria passed\n", 8 - failed);
  return failed == 0 ? 0 : 1;
}
