#pragma once

// JSON run-config schema (schema_version 1). Unknown keys anywhere in
// the document are errors so attack-parameter typos cannot silently
// change an experiment.

#include <string>

#include "json.hpp"

#include "bygars/harness.hpp"

namespace bygars {

RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& cfg);

RunConfig parse_config(const std::string& text);
RunConfig load_config_file(const std::string& path);

} // namespace bygars
