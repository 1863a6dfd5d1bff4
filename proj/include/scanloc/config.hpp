#pragma once

#include <filesystem>
#include <string>

#include "scanloc/agents.hpp"
#include "scanloc/backend.hpp"
#include "scanloc/pipeline.hpp"

namespace scanloc::config {

// Everything a run can be configured with, from one sectioned key=value file:
//
//   [pipeline]
//   top_k = 3
//   stop_threshold_px = 600
//
//   [oracle]
//   seed = 7
//   locator_sigma = 20
//
//   [scanner-backend]
//   endpoint = https://openrouter.ai/api/v1/chat/completions
//   model = ...
//   api_key_env = OPENROUTER_API_KEY
//
//   [locator-backend]
//   style = os_atlas
//
// Unknown sections or keys are configuration errors.
struct FileConfig {
    pipeline::PipelineConfig pipeline;
    agents::OracleConfig oracle;
    backend::BackendConfig scanner_backend;
    backend::BackendConfig locator_backend = backend::BackendConfig::locator_defaults();
};

FileConfig load_config(const std::filesystem::path& path);  // throws ConfigError

// parses a single "key = value" assignment into the given section
void apply_setting(FileConfig& config, const std::string& section, const std::string& key,
                   const std::string& value);

}  // namespace scanloc::config
