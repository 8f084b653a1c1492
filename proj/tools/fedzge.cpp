// Batch experiment runner: `fedzge run`, `fedzge sweep`, `fedzge comm`.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fedzge/comms.hpp"
#include "fedzge/config.hpp"
#include "fedzge/error.hpp"
#include "fedzge/experiment.hpp"
#include "fedzge/log.hpp"

namespace {

using namespace fedzge;

struct CommonFlags {
  std::string config;
  std::optional<std::string> method;
  std::optional<std::string> alpha;
  std::optional<std::string> clients;
  std::optional<std::string> rounds;
  std::optional<std::string> q;
  std::optional<std::string> seeds;
  std::optional<std::string> out;
  std::optional<std::size_t> parallel;
  std::vector<std::string> ablate;
  std::vector<std::string> set;
  bool accounting_only = false;
  bool verbose = false;
};

void add_common(CLI::App& app, CommonFlags& f) {
  app.add_option("--config", f.config, "INI config file")->check(CLI::ExistingFile);
  app.add_option("--method", f.method, "fedzge | fedavg | mhat | dsfl | whitebox");
  app.add_option("--alpha", f.alpha, "Dirichlet concentration");
  app.add_option("--clients", f.clients, "client count K");
  app.add_option("--rounds", f.rounds, "communication rounds T");
  app.add_option("--q", f.q, "ZO perturbation directions");
  app.add_option("--seed", f.seeds, "seed list, comma separated");
  app.add_option("--out", f.out, "output directory");
  app.add_option("--parallel", f.parallel, "concurrent seeds (run) or points (sweep)")->check(CLI::PositiveNumber);
  app.add_option("--ablate", f.ablate, "fid | adv | div | info | localdistill (repeatable)");
  app.add_option("--set", f.set, "override any config key: section.key=value (repeatable)");
  app.add_flag("--accounting-only", f.accounting_only, "record the communication ledger without training");
  app.add_flag("-v,--verbose", f.verbose, "per-round progress on stderr");
}

std::pair<std::string, std::string> split_assignment(const std::string& text, const char* what) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError(std::string(what) + ": expected name=value, got '" + text + "'");
  }
  return {text.substr(0, eq), text.substr(eq + 1)};
}

ExperimentConfig resolve(const CommonFlags& f) {
  ExperimentConfig cfg;
  if (!f.config.empty()) apply_config_file(cfg, f.config);
  for (const auto& s : f.set) {
    const auto [key, value] = split_assignment(s, "--set");
    apply_setting(cfg, key, value);
  }
  if (f.method) apply_method(cfg, *f.method);
  if (f.alpha) apply_setting(cfg, "data.alpha", *f.alpha);
  if (f.clients) apply_setting(cfg, "federation.clients", *f.clients);
  if (f.rounds) apply_setting(cfg, "federation.rounds", *f.rounds);
  if (f.q) apply_setting(cfg, "zo.directions", *f.q);
  if (f.seeds) apply_setting(cfg, "experiment.seeds", *f.seeds);
  if (f.out) cfg.out_dir = *f.out;
  if (f.parallel) cfg.parallel = *f.parallel;
  for (const auto& a : f.ablate) apply_ablation(cfg, a);
  if (f.accounting_only) cfg.accounting_only = true;
  set_log_level(f.verbose ? LogLevel::info : LogLevel::warn);
  validate(cfg);
  return cfg;
}

void print_summary(const ExperimentConfig& cfg, const ExperimentResult& r, std::ostream& out) {
  out << method_name(cfg.federation) << ": ";
  if (r.final_accuracy) {
    out << "final accuracy " << r.final_accuracy->mean << " +/- " << r.final_accuracy->std << ", ";
  }
  out << "communication " << format_gib(r.runs.front().ledger.totals().total()) << " GiB -> " << cfg.out_dir << '\n';
}

int cmd_run(const CommonFlags& f) {
  const ExperimentConfig cfg = resolve(f);
  const auto result = run_experiment(cfg);
  write_outputs(cfg, result, cfg.out_dir);
  print_summary(cfg, result, std::cout);
  return 0;
}

// One sweep axis value applied to a config.
void apply_axis(ExperimentConfig& cfg, const std::string& axis, const std::string& value) {
  if (axis == "q") {
    apply_setting(cfg, "zo.directions", value);
  } else if (axis == "alpha") {
    apply_setting(cfg, "data.alpha", value);
  } else if (axis == "epsilon_sf") {
    apply_setting(cfg, "federation.sampling_fraction", value);
  } else if (axis == "method") {
    apply_method(cfg, value);
  } else if (axis == "ablation") {
    // "none", a single flag, or flags joined with '+'.
    if (value == "none") return;
    std::size_t start = 0;
    while (start <= value.size()) {
      const auto plus = value.find('+', start);
      apply_ablation(cfg, value.substr(start, plus == std::string::npos ? std::string::npos : plus - start));
      if (plus == std::string::npos) break;
      start = plus + 1;
    }
  } else {
    apply_setting(cfg, axis, value);
  }
}

struct Axis {
  std::string name;
  std::vector<std::string> values;
};

int cmd_sweep(const CommonFlags& f, const std::vector<std::string>& axis_specs) {
  const ExperimentConfig base = resolve(f);
  std::vector<Axis> axes;
  for (const auto& spec : axis_specs) {
    auto [name, list] = split_assignment(spec, "--axis");
    Axis a{name, {}};
    std::size_t start = 0;
    while (true) {
      const auto comma = list.find(',', start);
      a.values.push_back(list.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    axes.push_back(std::move(a));
  }

  // Cartesian product, last axis varying fastest.
  std::vector<std::vector<std::string>> points{{}};
  for (const auto& a : axes) {
    std::vector<std::vector<std::string>> next;
    for (const auto& p : points) {
      for (const auto& v : a.values) {
        auto q = p;
        q.push_back(v);
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }

  const std::filesystem::path root = base.out_dir;
  std::vector<ExperimentConfig> configs;
  for (std::size_t i = 0; i < points.size(); ++i) {
    ExperimentConfig cfg = base;
    for (std::size_t j = 0; j < axes.size(); ++j) apply_axis(cfg, axes[j].name, points[i][j]);
    char dir[32];
    std::snprintf(dir, sizeof(dir), "point-%03zu", i);
    cfg.out_dir = (root / dir).string();
    cfg.parallel = 1;
    validate(cfg);
    configs.push_back(std::move(cfg));
  }

  std::vector<ExperimentResult> results(configs.size());
  run_jobs(configs.size(), base.parallel, [&](std::size_t i) {
    results[i] = run_experiment(configs[i]);
    write_outputs(configs[i], results[i], configs[i].out_dir);
  });

  std::filesystem::create_directories(root);
  std::ofstream index(root / "index.csv", std::ios::binary);
  index << "point,dir";
  for (const auto& a : axes) index << ',' << a.name;
  index << ",final_accuracy_mean,total_gib\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    index << i << ',' << std::filesystem::path(configs[i].out_dir).filename().string();
    for (const auto& v : points[i]) index << ',' << v;
    index << ',';
    if (results[i].final_accuracy) index << results[i].final_accuracy->mean;
    index << ',' << format_gib(results[i].runs.front().ledger.totals().total()) << '\n';
  }
  for (std::size_t i = 0; i < configs.size(); ++i) print_summary(configs[i], results[i], std::cout);
  return 0;
}

struct CommFlags {
  std::string method = "fedzge";
  std::uint64_t rounds = 100;
  std::uint64_t clients = 10;
  std::uint64_t q = 10;
  std::uint64_t batch = 500;
  std::uint64_t sample_elements = 3 * 32 * 32;
  std::uint64_t classes = 10;
  std::uint64_t model_parameters = 0;
  std::uint64_t generator_parameters = 0;
};

CommMethod parse_comm_method(const std::string& name) {
  for (auto m : {CommMethod::fedavg, CommMethod::mhat, CommMethod::dsfl, CommMethod::fedgen, CommMethod::fedftg,
                 CommMethod::dfrd, CommMethod::fedzkt, CommMethod::fedzge, CommMethod::fedzge_whitebox}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("--method: unknown method '" + name + "'");
}

int cmd_comm(const CommFlags& f) {
  auto spec = batch_payload_spec(parse_comm_method(f.method), f.rounds, f.clients, f.q, f.batch, f.sample_elements,
                                 f.classes);
  if (f.model_parameters != 0) {
    spec.global_model = PayloadShape{f.model_parameters};
    spec.local_model = PayloadShape{f.model_parameters};
  }
  if (f.generator_parameters != 0) spec.generator = PayloadShape{f.generator_parameters};
  const auto bytes = formula_bytes(spec);
  std::cout << to_string(spec.method) << " down " << bytes.down << " up " << bytes.up << " total " << bytes.total()
            << " bytes = " << format_gib(bytes.total()) << " GiB\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FedZGE federated learning simulator"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  auto* run = app.add_subcommand("run", "run one experiment over its seed list");
  add_common(*run, run_flags);

  CommonFlags sweep_flags;
  std::vector<std::string> axes;
  auto* sweep = app.add_subcommand("sweep", "run the cartesian product of --axis values");
  add_common(*sweep, sweep_flags);
  sweep->add_option("--axis", axes, "name=v1,v2,... over q, alpha, epsilon_sf, method, ablation or any config key")
      ->required();

  CommFlags comm_flags;
  auto* comm = app.add_subcommand("comm", "closed-form communication cost");
  comm->add_option("--method", comm_flags.method, "fedavg mhat dsfl fedgen fedftg dfrd fedzkt fedzge fedzge_whitebox");
  comm->add_option("--rounds", comm_flags.rounds);
  comm->add_option("--clients", comm_flags.clients, "participating clients per round");
  comm->add_option("--q", comm_flags.q);
  comm->add_option("--batch", comm_flags.batch);
  comm->add_option("--sample-elements", comm_flags.sample_elements);
  comm->add_option("--classes", comm_flags.classes);
  comm->add_option("--model-parameters", comm_flags.model_parameters);
  comm->add_option("--generator-parameters", comm_flags.generator_parameters);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run) return cmd_run(run_flags);
    if (*sweep) return cmd_sweep(sweep_flags, axes);
    if (*comm) return cmd_comm(comm_flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
