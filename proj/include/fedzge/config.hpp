#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fedzge/experiment.hpp"

namespace fedzge {

/// Every accepted `section.key` name, in documentation order.
const std::vector<std::string>& config_keys();

/// Sets one `section.key` from its text form. Unknown keys, malformed
/// values and constraint violations raise ConfigError naming the key.
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Reads an INI file: `[section]` headers and `key = value` lines.
ExperimentConfig load_config(const std::filesystem::path& path);
void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path);

/// Applies one ablation flag: fid (keep only the fidelity term), adv, div,
/// info, localdistill.
void apply_ablation(ExperimentConfig& cfg, std::string_view flag);

/// Method names accepted on the command line: fedzge, fedavg, mhat, dsfl,
/// whitebox.
void apply_method(ExperimentConfig& cfg, std::string_view name);
std::string method_name(const FederationConfig& cfg);

/// Whole-config validation, run before anything executes.
void validate(const ExperimentConfig& cfg);

nlohmann::ordered_json to_json(const ExperimentConfig& cfg);

}  // namespace fedzge
