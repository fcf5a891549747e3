#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "popdyn/sim.hpp"

namespace popdyn {

inline constexpr std::string_view kArtifactVersion = "0.1.0";

/// Seeds that were actually used for the sampled parts of a scenario.
struct ResolvedSeeds {
  std::uint64_t scenario = 0;
  std::optional<std::uint64_t> graph;
  std::optional<std::uint64_t> params;
  std::optional<std::uint64_t> x0;
};

struct LoadedScenario {
  Scenario scenario;
  ResolvedSeeds seeds;
};

/// Parses a scenario document. Every failure is an Error with code ParseError
/// whose message names the offending key. With `seed_override`, the graph,
/// params and x0 seeds become derive_seed(override, 0 / 1 / 2).
LoadedScenario parse_scenario(std::string_view text,
                              std::optional<std::uint64_t> seed_override = std::nullopt);

/// Fully explicit document (graph rows, alpha/beta/gamma, x0 matrix) that
/// parses back to an identical Scenario.
nlohmann::json scenario_to_json(const Scenario& sc);

struct OutputFile {
  std::string path;
  std::string sha256;
};

struct RunManifest {
  std::string version{kArtifactVersion};
  std::string command;
  std::string input_path;
  std::string input_sha256;
  ResolvedSeeds seeds;
  std::string kernel_backend;
  std::vector<OutputFile> outputs;
};

nlohmann::json to_json(const RunManifest& m);

}  // namespace popdyn
