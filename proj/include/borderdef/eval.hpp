// Evaluation harness: sensing rate, reward and Nash-payoff distributions,
// report comparison, and landscape export.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "borderdef/learn.hpp"

namespace borderdef {

struct EvalEpisode {
  std::uint64_t index = 0;
  Terminal terminal = Terminal::None;
  double reward = 0.0;
  int length = 0;
  std::optional<int> sensing_step;
  std::optional<double> nash_at_sensing;
  double final_attacker_y = 0.0;
};

struct EvalReport {
  Mode mode = Mode::GtAssisted;
  std::string config_id;
  std::size_t episodes = 0;
  std::optional<double> sensing_rate;
  std::optional<double> mean_reward;
  std::optional<double> median_reward;
  std::optional<double> std_reward;
  std::optional<double> mean_length;
  std::optional<double> mean_nash;
  std::optional<double> median_nash;
  /// Nash payoff at sensing, sensed episodes only, in episode order.
  std::vector<double> nash_payoffs;
  std::vector<EvalEpisode> records;
};

/// Controls from a learned policy: the clamped mean action unless `rng`
/// is supplied, in which case actions are sampled.
DefenderPolicy learned_policy(const PolicyParams& params, Rng* rng = nullptr);

/// Rebuilds every aggregate from the per-episode records.
EvalReport aggregate(std::vector<EvalEpisode> records, Mode mode, std::string config_id = {});

EvalReport evaluate_policy(const DefenderPolicy& policy, const GameConfig& config, Mode mode, std::size_t n_episodes,
                           std::uint64_t seed);

/// Evaluates a checkpointed policy; throws ConfigError when the checkpoint
/// does not fit the scenario.
EvalReport evaluate(const PolicyParams& params, const GameConfig& config, Mode mode, std::size_t n_episodes,
                    std::uint64_t seed, bool stochastic = false);

std::string config_fingerprint(const GameConfig& config);

struct MetricDelta {
  std::string name;
  std::optional<double> a;
  std::optional<double> b;
  std::optional<double> delta;
  std::optional<double> ratio;
};

struct Comparison {
  std::vector<MetricDelta> metrics;
  bool config_mismatch = false;
  bool episode_mismatch = false;
};

Comparison compare(const EvalReport& a, const EvalReport& b);

std::string report_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);
/// Per-episode rows with the cumulative mean reward versus episode index.
std::string report_csv(const EvalReport& report);
std::string comparison_json(const Comparison& c);

/// Landscape matrix as CSV: an x-axis line, a y-axis line, then one row per
/// y value. Failed cells print as nan.
std::string landscape_csv(const Landscape& landscape);

Landscape landscape_report(const PursuitConfig& fixed, double varying_defender_nu, const GridSpec& grid,
                           const std::filesystem::path& out);

/// One JSON object per line and step: positions, controls, phase and
/// terminal reason.
std::string trace_jsonl(const EpisodeRecord& record);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace borderdef
