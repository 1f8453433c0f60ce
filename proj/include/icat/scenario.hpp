#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "icat/engine.hpp"

namespace icat {

/// Parses a scenario document. Omitted fields keep their defaults; unknown
/// keys and type mismatches throw ConfigError naming the field path.
/// Relative map paths are resolved against `base_dir`.
SimConfig scenario_from_json(const nlohmann::json& doc, const std::string& base_dir = "");

nlohmann::json scenario_to_json(const SimConfig& cfg);

/// Reads and parses a scenario file; throws std::runtime_error when the file
/// cannot be read and ConfigError when it is invalid.
SimConfig load_scenario(const std::string& path);

}  // namespace icat
