#pragma once

#include <filesystem>
#include <string>

#include "saoithe/core_model.hpp"

namespace saoithe {

// Flat `key = value` documents. `#` starts a comment; keys mirror SimConfig
// field names. Energy component keys switch components on (starting from the
// defaults); `energy_components = none` switches them off.

SimConfig parse_config(const std::string& text);
SimConfig load_config(const std::filesystem::path& path);

/// Canonical text form with a unit-documenting comment header. Stable for a
/// given config, and parse_config(format_config(c)) == c.
std::string format_config(const SimConfig& cfg);
void save_config(const SimConfig& cfg, const std::filesystem::path& path);

/// Shortest text that reads back to the same double.
std::string fmt_double(double v);

}  // namespace saoithe
