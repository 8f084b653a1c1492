#include "fedzge/experiment.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "fedzge/config.hpp"
#include "fedzge/error.hpp"

namespace fedzge {

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void write_ledger(const CommLedger& ledger, const std::filesystem::path& path) {
  auto out = open_out(path);
  ledger.write_csv(out);
}

}  // namespace

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw Error("mean_std: no values");
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / static_cast<double>(values.size()))};
}

FederationConfig seeded(const ExperimentConfig& cfg, std::uint64_t seed) {
  FederationConfig f = cfg.federation;
  f.seed = seed;
  return f;
}

AccountingShape experiment_accounting_shape(const ExperimentConfig& cfg) {
  AccountingShape s = accounting_shape(cfg.federation, cfg.data.dim, cfg.data.classes);
  if (cfg.model_parameters != 0) {
    for (auto& p : s.client_parameters) p = cfg.model_parameters;
    s.global_parameters = cfg.model_parameters;
  }
  return s;
}

void run_jobs(std::size_t count, std::size_t parallel, const std::function<void(std::size_t)>& job) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(std::max<std::size_t>(parallel, 1), count);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  ExperimentResult result;
  result.runs.resize(cfg.seeds.size());
  const auto shape = experiment_accounting_shape(cfg);
  run_jobs(cfg.seeds.size(), cfg.parallel, [&](std::size_t i) {
    const FederationConfig fc = seeded(cfg, cfg.seeds[i]);
    if (!cfg.accounting_only) {
      result.runs[i] = run_method(fc, cfg.data);
      return;
    }
    RunResult r;
    r.seed = fc.seed;
    r.ledger = schedule_ledger(fc, shape);
    for (std::size_t t = 1; t <= fc.rounds; ++t) {
      RoundMetrics m;
      m.round = t;
      const auto totals = r.ledger.round_totals(t);
      m.bytes_down = totals.down;
      m.bytes_up = totals.up;
      r.rounds.push_back(std::move(m));
    }
    result.runs[i] = std::move(r);
  });
  if (!cfg.accounting_only) {
    std::vector<double> acc;
    for (const auto& r : result.runs) acc.push_back(r.final_accuracy);
    result.final_accuracy = mean_std(acc);
  }
  return result;
}

void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "metrics.csv");
    out << "seed,round,accuracy,loss_fid,loss_adv,loss_div,loss_info,loss_gd,bytes_down,bytes_up\n";
    for (const auto& run : result.runs) {
      for (const auto& m : run.rounds) {
        out << run.seed << ',' << m.round << ',';
        if (cfg.accounting_only) {
          out << ",,,,,,";
        } else {
          out << format_double(m.accuracy) << ',' << format_double(m.losses.fidelity) << ','
              << format_double(m.losses.adversarial) << ',' << format_double(m.losses.diversity) << ','
              << format_double(m.losses.information) << ',' << format_double(m.global_distill) << ',';
        }
        out << m.bytes_down << ',' << m.bytes_up << '\n';
      }
    }
  }
  if (!result.runs.empty()) write_ledger(result.runs.front().ledger, dir / "ledger.csv");
  if (result.runs.size() > 1) {
    for (const auto& run : result.runs) write_ledger(run.ledger, dir / ("ledger-seed" + std::to_string(run.seed) + ".csv"));
  }

  nlohmann::ordered_json summary;
  summary["method"] = method_name(cfg.federation);
  summary["seeds"] = cfg.seeds;
  summary["rounds"] = cfg.federation.rounds;
  summary["accounting_only"] = cfg.accounting_only;
  if (result.final_accuracy) {
    summary["final_accuracy"] = {{"mean", result.final_accuracy->mean}, {"std", result.final_accuracy->std}};
  } else {
    summary["final_accuracy"] = nullptr;
  }
  std::vector<double> gib;
  auto runs = nlohmann::ordered_json::array();
  for (const auto& run : result.runs) {
    const auto totals = run.ledger.totals();
    gib.push_back(to_gib(totals.total()));
    nlohmann::ordered_json r;
    r["seed"] = run.seed;
    if (cfg.accounting_only) {
      r["final_accuracy"] = nullptr;
    } else {
      r["final_accuracy"] = run.final_accuracy;
    }
    r["bytes_down"] = totals.down;
    r["bytes_up"] = totals.up;
    r["bytes_total"] = totals.total();
    r["total_gib"] = format_gib(totals.total());
    if (run.class_entropy) {
      r["class_entropy"] = *run.class_entropy;
    } else {
      r["class_entropy"] = nullptr;
    }
    runs.push_back(std::move(r));
  }
  if (!gib.empty()) {
    const auto g = mean_std(gib);
    summary["total_gib"] = {{"mean", g.mean}, {"std", g.std}};
  }
  summary["runs"] = std::move(runs);
  {
    auto out = open_out(dir / "summary.json");
    out << summary.dump(2) << '\n';
  }
  {
    auto out = open_out(dir / "resolved-config.json");
    out << to_json(cfg).dump(2) << '\n';
  }
}

}  // namespace fedzge
