#include "fedzge/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include "fedzge/error.hpp"

namespace fedzge {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void bad_value(std::string_view key, std::string_view expected, std::string_view value) {
  throw ConfigError(std::string(key) + ": expected " + std::string(expected) + ", got '" + std::string(value) + "'");
}

std::string trim(std::string_view v) {
  const auto b = v.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = v.find_last_not_of(" \t\r\n");
  return std::string(v.substr(b, e - b + 1));
}

std::uint64_t parse_u64(std::string_view key, std::string_view raw) {
  const std::string v = trim(raw);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, "a non-negative integer", raw);
  return out;
}

std::size_t parse_size(std::string_view key, std::string_view raw) {
  return static_cast<std::size_t>(parse_u64(key, raw));
}

double parse_double(std::string_view key, std::string_view raw) {
  const std::string v = trim(raw);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    bad_value(key, "a number", raw);
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view raw) {
  const std::string v = trim(raw);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, "a boolean", raw);
}

std::vector<std::string> split_list(std::string_view raw) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in{std::string(raw)};
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  return out;
}

template <class T, class Parse>
std::vector<T> parse_list(std::string_view key, std::string_view raw, Parse parse) {
  std::vector<T> out;
  for (const auto& item : split_list(raw)) out.push_back(parse(key, item));
  if (out.empty()) bad_value(key, "a comma-separated list", raw);
  return out;
}

struct KeyDef {
  std::string name;
  std::function<void(ExperimentConfig&, std::string_view key, std::string_view value)> set;
  std::function<Json(const ExperimentConfig&)> get;
};

#define FEDZGE_SIZE(key, field)                                                                           \
  KeyDef {                                                                                                \
    key, [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.field = parse_size(k, v); }, \
        [](const ExperimentConfig& c) { return Json(c.field); }                                           \
  }
#define FEDZGE_DOUBLE(key, field)                                                                           \
  KeyDef {                                                                                                  \
    key, [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.field = parse_double(k, v); }, \
        [](const ExperimentConfig& c) { return Json(c.field); }                                             \
  }
#define FEDZGE_BOOL(key, field)                                                                           \
  KeyDef {                                                                                                \
    key, [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.field = parse_bool(k, v); }, \
        [](const ExperimentConfig& c) { return Json(c.field); }                                           \
  }
#define FEDZGE_STRING(key, field)                                                                                \
  KeyDef {                                                                                                       \
    key, [](ExperimentConfig& c, std::string_view, std::string_view v) { c.field = trim(v); },                   \
        [](const ExperimentConfig& c) { return Json(c.field); }                                                  \
  }
#define FEDZGE_SIZE_LIST(key, field)                                                                  \
  KeyDef {                                                                                            \
    key,                                                                                              \
        [](ExperimentConfig& c, std::string_view k, std::string_view v) {                             \
          c.field = parse_list<std::size_t>(k, v, parse_size);                                        \
        },                                                                                            \
        [](const ExperimentConfig& c) { return Json(c.field); }                                       \
  }

const std::vector<KeyDef>& key_defs() {
  static const std::vector<KeyDef> defs = {
      KeyDef{"experiment.seeds",
             [](ExperimentConfig& c, std::string_view k, std::string_view v) {
               c.seeds = parse_list<std::uint64_t>(k, v, parse_u64);
             },
             [](const ExperimentConfig& c) { return Json(c.seeds); }},
      FEDZGE_STRING("experiment.out", out_dir),
      FEDZGE_SIZE("experiment.parallel", parallel),
      FEDZGE_BOOL("experiment.accounting_only", accounting_only),
      FEDZGE_SIZE("experiment.model_parameters", model_parameters),

      KeyDef{"federation.method", [](ExperimentConfig& c, std::string_view, std::string_view v) { apply_method(c, trim(v)); },
             [](const ExperimentConfig& c) { return Json(method_name(c.federation)); }},
      FEDZGE_SIZE("federation.clients", federation.clients),
      FEDZGE_DOUBLE("federation.sampling_fraction", federation.sampling_fraction),
      FEDZGE_SIZE("federation.rounds", federation.rounds),
      FEDZGE_SIZE("federation.local_epochs", federation.local_epochs),
      FEDZGE_SIZE("federation.local_distill_epochs", federation.local_distill_epochs),
      FEDZGE_SIZE("federation.global_distill_epochs", federation.global_distill_epochs),
      FEDZGE_SIZE("federation.local_batch", federation.local_batch),
      FEDZGE_DOUBLE("federation.lr_local", federation.lr_local),
      FEDZGE_DOUBLE("federation.lr_global", federation.lr_global),
      FEDZGE_DOUBLE("federation.lr_generator", federation.lr_generator),
      FEDZGE_BOOL("federation.local_distill", federation.local_distill),
      FEDZGE_SIZE("federation.synthetic_batch", federation.synthetic_batch),
      FEDZGE_SIZE("federation.noise_dim", federation.noise_dim),
      FEDZGE_SIZE_LIST("federation.generator_hidden", federation.generator_hidden),
      FEDZGE_SIZE_LIST("federation.client_hidden", federation.client_hidden),
      FEDZGE_BOOL("federation.heterogeneous", federation.heterogeneous),

      FEDZGE_DOUBLE("loss.adversarial", federation.loss.adversarial),
      FEDZGE_DOUBLE("loss.diversity", federation.loss.diversity),
      FEDZGE_DOUBLE("loss.information", federation.loss.information),
      FEDZGE_DOUBLE("loss.temperature", federation.loss.temperature),
      FEDZGE_BOOL("loss.temperature_squared", federation.loss.temperature_squared),
      FEDZGE_BOOL("loss.use_fidelity", federation.mask.fidelity),
      FEDZGE_BOOL("loss.use_adversarial", federation.mask.adversarial),
      FEDZGE_BOOL("loss.use_diversity", federation.mask.diversity),
      FEDZGE_BOOL("loss.use_information", federation.mask.information),

      FEDZGE_SIZE("zo.directions", federation.zo.directions),
      FEDZGE_DOUBLE("zo.smoothing", federation.zo.smoothing),
      KeyDef{"zo.mode",
             [](ExperimentConfig& c, std::string_view k, std::string_view v) {
               const std::string m = trim(v);
               if (m == "gaussian") {
                 c.federation.zo.mode = PerturbationMode::gaussian;
               } else if (m == "sphere") {
                 c.federation.zo.mode = PerturbationMode::sphere;
               } else {
                 bad_value(k, "gaussian or sphere", v);
               }
             },
             [](const ExperimentConfig& c) {
               return Json(c.federation.zo.mode == PerturbationMode::gaussian ? "gaussian" : "sphere");
             }},
      KeyDef{"zo.seed",
             [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.federation.zo.seed = parse_u64(k, v); },
             [](const ExperimentConfig& c) { return Json(c.federation.zo.seed); }},

      FEDZGE_SIZE("data.classes", data.classes),
      FEDZGE_SIZE("data.dim", data.dim),
      FEDZGE_SIZE("data.train_per_class", data.train_per_class),
      FEDZGE_SIZE("data.test_per_class", data.test_per_class),
      FEDZGE_SIZE("data.aux_per_class", data.aux_per_class),
      FEDZGE_DOUBLE("data.spread", data.spread),
      FEDZGE_DOUBLE("data.alpha", data.alpha),
      FEDZGE_STRING("data.train_csv", data.train_csv),
      FEDZGE_STRING("data.test_csv", data.test_csv),
      FEDZGE_STRING("data.aux_csv", data.aux_csv),
  };
  return defs;
}

#undef FEDZGE_SIZE
#undef FEDZGE_DOUBLE
#undef FEDZGE_BOOL
#undef FEDZGE_STRING
#undef FEDZGE_SIZE_LIST

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& d : key_defs()) out.push_back(d.name);
    return out;
  }();
  return keys;
}

void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  for (const auto& d : key_defs()) {
    if (d.name == key) {
      d.set(cfg, key, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config file " + path.string() + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      if (!body.data().empty()) throw ConfigError("config key '" + section + "' is outside a [section]");
      continue;
    }
    for (const auto& [key, value] : body) {
      apply_setting(cfg, section + "." + key, value.data());
    }
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  ExperimentConfig cfg;
  apply_config_file(cfg, path);
  return cfg;
}

void apply_ablation(ExperimentConfig& cfg, std::string_view flag) {
  auto& f = cfg.federation;
  if (flag == "fid") {
    f.mask = LossMask::fidelity_only();
  } else if (flag == "adv") {
    f.mask.adversarial = false;
  } else if (flag == "div") {
    f.mask.diversity = false;
  } else if (flag == "info") {
    f.mask.information = false;
  } else if (flag == "localdistill") {
    f.local_distill = false;
  } else {
    bad_value("ablate", "one of fid, adv, div, info, localdistill", flag);
  }
}

void apply_method(ExperimentConfig& cfg, std::string_view name) {
  auto& f = cfg.federation;
  if (name == "fedzge") {
    f.method = Method::fedzge;
  } else if (name == "fedavg") {
    f.method = Method::fedavg;
  } else if (name == "mhat" || name == "distill_fl") {
    f.method = Method::distill_fl;
    f.labeled_aux = true;
  } else if (name == "dsfl") {
    f.method = Method::distill_fl;
    f.labeled_aux = false;
  } else if (name == "whitebox" || name == "whitebox_datafree") {
    f.method = Method::whitebox_datafree;
  } else {
    bad_value("federation.method", "one of fedzge, fedavg, mhat, dsfl, whitebox", name);
  }
}

std::string method_name(const FederationConfig& f) {
  switch (f.method) {
    case Method::fedzge: return "fedzge";
    case Method::fedavg: return "fedavg";
    case Method::distill_fl: return f.labeled_aux ? "mhat" : "dsfl";
    case Method::whitebox_datafree: return "whitebox";
  }
  return "unknown";
}

void validate(const ExperimentConfig& cfg) {
  cfg.federation.validate();
  if (cfg.seeds.empty()) throw ConfigError("experiment.seeds: at least one seed is required");
  if (cfg.parallel == 0) throw ConfigError("experiment.parallel: must be at least 1");
  const auto& d = cfg.data;
  if (d.classes < 2) throw ConfigError("data.classes: must be at least 2");
  if (d.dim == 0) throw ConfigError("data.dim: must be at least 1");
  if (!(d.alpha > 0.0)) throw ConfigError("data.alpha: must be positive");
  if (cfg.accounting_only) return;
  if (d.train_csv.empty() && d.train_per_class == 0) throw ConfigError("data.train_per_class: must be at least 1");
  if (d.test_csv.empty() && d.test_per_class == 0) throw ConfigError("data.test_per_class: must be at least 1");
  if (!(d.spread >= 0.0)) throw ConfigError("data.spread: must be non-negative");
  if (cfg.federation.method == Method::distill_fl && d.aux_csv.empty() &&
      d.aux_per_class * d.classes < cfg.federation.synthetic_batch) {
    throw ConfigError("data.aux_per_class: auxiliary set is smaller than federation.synthetic_batch");
  }
  if (d.train_csv.empty() && d.train_per_class * d.classes < cfg.federation.clients) {
    throw ConfigError("data.train_per_class: fewer training samples than clients");
  }
}

Json to_json(const ExperimentConfig& cfg) {
  Json out = Json::object();
  for (const auto& d : key_defs()) {
    const auto dot = d.name.find('.');
    out[d.name.substr(0, dot)][d.name.substr(dot + 1)] = d.get(cfg);
  }
  return out;
}

}  // namespace fedzge
