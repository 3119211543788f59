#pragma once

// JSON <-> ExperimentConfig, with field-level diagnostics, and the named
// parameter presets.

#include <string>

#include <json.hpp>

#include "unionrec/montecarlo.hpp"

namespace unionrec::config {

using json = nlohmann::json;

/// Throws ConfigError naming the missing or malformed field ("model.k0", ...).
montecarlo::ExperimentConfig experiment_from_json(const json& j);
json experiment_to_json(const montecarlo::ExperimentConfig& cfg);

/// Parse a JSON file; syntax errors are reported as "path:line:column".
json load_json_file(const std::string& path);

/// "fig1a", "fig1b" or "fig2"; desk = true gives the reduced-size variant.
montecarlo::ExperimentConfig preset(const std::string& name, bool desk);

}  // namespace unionrec::config
