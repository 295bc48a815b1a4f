#pragma once

// JSON experiment configuration. Every key is optional; unknown keys are
// rejected. Overrides use the form section.key=value (value parsed as JSON,
// falling back to a plain string).

#include "sopfx/harness.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sopfx::harness {

/// Throws ConfigError for malformed text, unknown keys or invalid values.
ExperimentConfig parse_config(const std::string& json_text);

/// Reads `path` (or starts from defaults) and applies the overrides in order.
ExperimentConfig load_config(const std::optional<std::filesystem::path>& path,
                             const std::vector<std::string>& overrides = {});

/// Effective configuration, every field spelled out, stable key order.
std::string config_to_json(const ExperimentConfig& cfg);

} // namespace sopfx::harness
