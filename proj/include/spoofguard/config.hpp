#pragma once

#include "spoofguard/sim.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace spoofguard {

inline constexpr int kConfigSchemaVersion = 1;

/// Built-in scenarios: "paper-v" (attacker at (100, 100), r_effect = 30) and
/// "paper-v-near" (spoofing starts next to the device, r_effect = 40).
ScenarioConfig preset(std::string_view name);
std::vector<std::string> preset_names();

/// YAML scenario file; see docs/config_schema.md. Unknown keys are errors.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::filesystem::path& path);

}  // namespace spoofguard
