// Scenario files: one JSON document with game, defenders, reward, train,
// eval and scripted sections. Unknown keys are errors; every omitted
// value takes its default and shows up in the resolved echo.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "borderdef/learn.hpp"

namespace borderdef {

struct EvalSettings {
  std::size_t episodes = 1000;
  /// Unset means the caller picks (command-line seed or fresh entropy).
  std::optional<std::uint64_t> seed;
  bool stochastic = false;
};

struct Scenario {
  GameConfig game = reference_config(1);
  Mode mode = Mode::GtAssisted;
  TrainConfig train;
  EvalSettings eval;
  SearchPattern search = SearchPattern::Hold;
};

/// Reference scenario for a team of `n_defenders`.
Scenario default_scenario(std::size_t n_defenders);

/// Throws ConfigError naming the offending key path.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);

/// Fully resolved document; parse_scenario(scenario_json(s)) == s.
std::string scenario_json(const Scenario& s);

}  // namespace borderdef
