#pragma once

// Run configuration: every tunable of the lab as one JSON document.
//
// Loading starts from the defaults and overrides the keys present; unknown
// keys and invalid values are rejected with ErrorCode::InvalidConfig.

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "binpick/pipeline.hpp"
#include "binpick/scene.hpp"
#include "binpick/world.hpp"

namespace binpick {

struct RunConfig {
  Workspace workspace;
  Lab lab;
  /// Per-trial defaults; mode and seed are normally set by the caller.
  TrialConfig trial;
  SceneParams scene;
  SingulationBench singulation;
  PipelineBench pipeline;
};

/// Environment variable naming a config file when no path is given explicitly.
inline constexpr const char* kConfigEnv = "BINPICK_CONFIG";

void validate(const RunConfig& cfg);

nlohmann::json config_to_json(const RunConfig& cfg);
RunConfig config_from_json(const nlohmann::json& doc);

/// Canonical text form (sorted keys, two-space indent, trailing newline).
std::string dump_config(const RunConfig& cfg);
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// `explicit_path` if set, else $BINPICK_CONFIG if set and non-empty.
std::optional<std::filesystem::path> resolve_config_path(const std::optional<std::filesystem::path>& explicit_path);
/// Loads the resolved config, or returns the defaults when there is none.
RunConfig load_config_or_default(const std::optional<std::filesystem::path>& explicit_path);

}  // namespace binpick
