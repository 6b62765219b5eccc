#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prsim/engine.hpp"

namespace prsim {

/// Builds a scenario from its JSON text. Population groups are expanded into
/// devices using streams derived from the scenario seed, so the same text and
/// seed always yield the same devices. `seed_override`, when set, replaces the
/// file's seed before expansion. Throws ConfigError (unknown keys included).
ScenarioConfig load_scenario(std::string_view json_text,
                             std::optional<std::uint64_t> seed_override = {});
ScenarioConfig load_scenario_file(
    const std::filesystem::path& path,
    std::optional<std::uint64_t> seed_override = {});

/// Fully expanded form: every behavior spelled out and every device listed.
/// load_scenario(scenario_to_json(cfg)) reproduces cfg.
std::string scenario_to_json(const ScenarioConfig& cfg, int indent = 2);

struct Preset {
  std::string name;
  std::string description;
  std::string json;
};

/// Scenario files shipped with the tool.
const std::vector<Preset>& presets();
/// Throws ConfigError for an unknown name.
const Preset& find_preset(std::string_view name);

}  // namespace prsim
