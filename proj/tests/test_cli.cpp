#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fedzge/comms.hpp"
#include "fedzge/config.hpp"
#include "fedzge/error.hpp"

using namespace fedzge;
namespace fs = std::filesystem;

namespace {

const fs::path kGolden = FEDZGE_GOLDEN_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line + "\n";
}

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("fedzge-cli-") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override {
    if (!HasFailure()) fs::remove_all(dir_);
  }

  Outcome run(const std::string& args) {
    const auto out = dir_ / "stdout.txt";
    const auto err = dir_ / "stderr.txt";
    const std::string cmd = std::string("cd '") + dir_.string() + "' && '" + FEDZGE_CLI + "' " + args + " > '" +
                            out.string() + "' 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    return {WEXITSTATUS(status), slurp(out), slurp(err)};
  }

  fs::path write(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir_;
};

// Tiny trainable setting, a few seconds at most.
const std::string kTiny =
    "--rounds 1 --q 2 --set federation.synthetic_batch=16 --set federation.local_epochs=1 "
    "--set federation.local_distill_epochs=1 --set federation.global_distill_epochs=1 "
    "--set federation.generator_hidden=8 --set federation.client_hidden=8 --set federation.noise_dim=4 "
    "--set data.dim=4 --set data.classes=3 --set data.train_per_class=20 --set data.test_per_class=10 "
    "--set data.aux_per_class=10";

}  // namespace

TEST(ConfigKeys, DefaultsAndErrors) {
  ExperimentConfig cfg;
  EXPECT_EQ(cfg.federation.loss.temperature, 5.0);
  EXPECT_FALSE(cfg.federation.loss.temperature_squared);
  EXPECT_EQ(to_json(cfg)["loss"]["temperature"], 5.0);

  try {
    apply_setting(cfg, "federation.nonsense", "1");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("federation.nonsense"), std::string::npos);
  }
  try {
    apply_setting(cfg, "federation.clients", "many");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("federation.clients"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("many"), std::string::npos);
  }
  EXPECT_THROW(apply_setting(cfg, "loss.temperature_squared", "perhaps"), ConfigError);
  EXPECT_THROW(apply_setting(cfg, "zo.mode", "cube"), ConfigError);
  EXPECT_THROW(apply_ablation(cfg, "everything"), ConfigError);
  EXPECT_THROW(apply_method(cfg, "fedprox"), ConfigError);

  apply_setting(cfg, "zo.mode", "sphere");
  EXPECT_EQ(cfg.federation.zo.mode, PerturbationMode::sphere);
  apply_setting(cfg, "experiment.seeds", "3,1,2");
  EXPECT_EQ(cfg.seeds, (std::vector<std::uint64_t>{3, 1, 2}));
  apply_setting(cfg, "federation.generator_hidden", "32,16");
  EXPECT_EQ(cfg.federation.generator_hidden, (std::vector<std::size_t>{32, 16}));
  for (const auto& key : config_keys()) EXPECT_NE(key.find('.'), std::string::npos) << key;
}

TEST(ConfigKeys, AblationsAndMethods) {
  ExperimentConfig cfg;
  apply_ablation(cfg, "fid");
  EXPECT_TRUE(cfg.federation.mask.fidelity);
  EXPECT_FALSE(cfg.federation.mask.adversarial || cfg.federation.mask.diversity || cfg.federation.mask.information);
  ExperimentConfig c2;
  apply_ablation(c2, "div");
  EXPECT_FALSE(c2.federation.mask.diversity);
  EXPECT_TRUE(c2.federation.mask.adversarial && c2.federation.mask.information);
  apply_ablation(c2, "localdistill");
  EXPECT_FALSE(c2.federation.local_distill);

  apply_method(cfg, "dsfl");
  EXPECT_EQ(cfg.federation.method, Method::distill_fl);
  EXPECT_FALSE(cfg.federation.labeled_aux);
  EXPECT_EQ(method_name(cfg.federation), "dsfl");
  apply_method(cfg, "mhat");
  EXPECT_TRUE(cfg.federation.labeled_aux);
  EXPECT_EQ(method_name(cfg.federation), "mhat");
  apply_method(cfg, "whitebox");
  EXPECT_EQ(cfg.federation.method, Method::whitebox_datafree);
}

TEST_F(Cli, ConfigFileErrors) {
  ExperimentConfig cfg;
  const auto missing = dir_ / "absent.ini";
  try {
    apply_config_file(cfg, missing);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(missing.string()), std::string::npos);
  }
  const auto unknown = write("unknown.ini", "[federation]\nwidgets = 3\n");
  try {
    apply_config_file(cfg, unknown);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("federation.widgets"), std::string::npos);
  }
  const auto loose = write("loose.ini", "rounds = 3\n");
  EXPECT_THROW(apply_config_file(cfg, loose), ConfigError);
  const auto bad = write("bad.ini", "[zo]\nsmoothing = small\n");
  try {
    apply_config_file(cfg, bad);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("zo.smoothing"), std::string::npos);
  }

  const auto r = run("run --config absent.ini");
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("absent.ini"), std::string::npos);
  const auto r2 = run("run --accounting-only --set federation.widgets=2");
  EXPECT_EQ(r2.code, 1);
  EXPECT_NE(r2.err.find("error: unknown config key 'federation.widgets'"), std::string::npos) << r2.err;
}

TEST_F(Cli, FlagsOverrideFile) {
  write("q.ini", "[zo]\ndirections = 10\n\n[loss]\nadversarial = 0.5\n");
  const auto r = run("run --config q.ini --q 5 --accounting-only --out o");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(dir_ / "o" / "resolved-config.json"));
  EXPECT_EQ(j["zo"]["directions"], 5);
  EXPECT_EQ(j["loss"]["adversarial"], 0.5);
  EXPECT_EQ(j["loss"]["temperature"], 5.0);

  write("q2.ini", "[zo]\ndirections = 10\n");
  ASSERT_EQ(run("run --config q2.ini --set zo.directions=7 --accounting-only --out o2").code, 0);
  EXPECT_EQ(nlohmann::json::parse(slurp(dir_ / "o2" / "resolved-config.json"))["zo"]["directions"], 7);
}

TEST_F(Cli, AccountingOnlyGolden) {
  fs::copy_file(kGolden / "accounting.ini", dir_ / "accounting.ini");
  const auto r = run("run --config accounting.ini --out acc");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir_ / "acc" / "ledger.csv"), slurp(kGolden / "accounting_ledger.csv"));
  EXPECT_EQ(slurp(dir_ / "acc" / "metrics.csv"), slurp(kGolden / "accounting_metrics.csv"));
  EXPECT_EQ(slurp(dir_ / "acc" / "summary.json"), slurp(kGolden / "accounting_summary.json"));
}

TEST_F(Cli, SummaryGibMatchesFormula) {
  const auto r = run(
      "run --accounting-only --rounds 100 --clients 10 --q 10 --set federation.synthetic_batch=500 "
      "--set data.dim=3072 --set data.classes=10 --out cifar");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(dir_ / "cifar" / "summary.json"));
  const auto bytes = formula_bytes(batch_payload_spec(CommMethod::fedzge, 100, 10, 10, 500, 3072, 10));
  EXPECT_EQ(j["runs"][0]["bytes_total"].get<std::uint64_t>(), bytes.total());
  EXPECT_EQ(j["runs"][0]["total_gib"], "63.17");
  EXPECT_NE(r.out.find("63.17 GiB"), std::string::npos);

  const auto c = run("comm --method fedzge --q 20");
  ASSERT_EQ(c.code, 0);
  EXPECT_NE(c.out.find("120.57 GiB"), std::string::npos) << c.out;
  const auto f = run("comm --method fedavg --model-parameters 11173962");
  EXPECT_NE(f.out.find("83.25 GiB"), std::string::npos) << f.out;
}

TEST_F(Cli, ShippedConfigsLoad) {
  const fs::path configs = FEDZGE_CONFIG_DIR;
  const auto desk = load_config(configs / "desk.ini");
  EXPECT_EQ(desk.seeds.size(), 5u);
  EXPECT_EQ(desk.federation.clients, 5u);
  EXPECT_EQ(desk.data.spread, 1.5);
  const auto r = run("run --config '" + (configs / "image_accounting.ini").string() + "' --out img");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("63.17 GiB"), std::string::npos) << r.out;
}

TEST_F(Cli, SmokeRunWritesSchemasAndIsReproducible) {
  const auto r = run("run " + kTiny + " --clients 1 --out a");
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"metrics.csv", "ledger.csv", "summary.json", "resolved-config.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / "a" / f)) << f;
  }
  EXPECT_EQ(first_line(dir_ / "a" / "metrics.csv"), slurp(kGolden / "metrics_header.csv"));
  EXPECT_EQ(first_line(dir_ / "a" / "ledger.csv"), slurp(kGolden / "ledger_header.csv"));
  const auto summary = nlohmann::ordered_json::parse(slurp(dir_ / "a" / "summary.json"));
  std::string keys;
  for (const auto& [k, v] : summary.items()) keys += k + "\n";
  EXPECT_EQ(keys, slurp(kGolden / "summary_keys.txt"));
  EXPECT_TRUE(summary["final_accuracy"]["mean"].is_number());
  EXPECT_TRUE(summary["runs"][0]["class_entropy"].is_number());

  // Same directory name, so even resolved-config.json must match.
  fs::rename(dir_ / "a", dir_ / "first");
  ASSERT_EQ(run("run " + kTiny + " --clients 1 --out a").code, 0);
  for (const char* f : {"metrics.csv", "ledger.csv", "summary.json", "resolved-config.json"}) {
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "first" / f)) << f;
  }
}

TEST_F(Cli, ParallelSeedsMatchSerial) {
  ASSERT_EQ(run("run " + kTiny + " --clients 2 --seed 0,1,2 --out s").code, 0);
  fs::rename(dir_ / "s", dir_ / "serial");
  ASSERT_EQ(run("run " + kTiny + " --clients 2 --seed 0,1,2 --parallel 3 --out s").code, 0);
  for (const char* f : {"metrics.csv", "ledger.csv", "ledger-seed0.csv", "ledger-seed1.csv", "ledger-seed2.csv",
                        "summary.json"}) {
    ASSERT_TRUE(fs::exists(dir_ / "s" / f)) << f;
    EXPECT_EQ(slurp(dir_ / "s" / f), slurp(dir_ / "serial" / f)) << f;
  }
}

TEST_F(Cli, SweepOverDirectionsAtImageShapes) {
  const auto r = run(
      "sweep --accounting-only --rounds 100 --clients 10 --set federation.synthetic_batch=500 "
      "--set data.dim=3072 --set data.classes=10 --axis q=1,5,20 --out sw");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir_ / "sw" / "index.csv"),
            "point,dir,q,final_accuracy_mean,total_gib\n"
            "0,point-000,1,,11.50\n"
            "1,point-001,5,,34.46\n"
            "2,point-002,20,,120.57\n");
}

TEST_F(Cli, SweepFidelityAblationZeroesOtherTerms) {
  const auto r = run("sweep " + kTiny + " --clients 2 --axis ablation=none,fid --parallel 2 --out ab");
  ASSERT_EQ(r.code, 0) << r.err;
  auto rows = [&](const char* point) {
    std::ifstream in(dir_ / "ab" / point / "metrics.csv");
    std::string line;
    std::getline(in, line);
    std::vector<std::vector<std::string>> out;
    while (std::getline(in, line)) {
      std::vector<std::string> cells;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      out.push_back(cells);
    }
    return out;
  };
  const auto none = rows("point-000");
  const auto fid = rows("point-001");
  ASSERT_FALSE(fid.empty());
  for (const auto& row : fid) {
    ASSERT_EQ(row.size(), 10u);
    EXPECT_NE(std::stod(row[3]), 0.0);  // fidelity
    for (int c : {4, 5, 6}) EXPECT_EQ(std::stod(row[c]), 0.0) << c;
  }
  for (const auto& row : none) EXPECT_NE(std::stod(row[5]), 0.0);  // diversity is active
}
