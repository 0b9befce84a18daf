// Dec-POMDP layer over the engine: observations, action decoding, the two
// reward structures, and a batched auto-resetting environment.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "borderdef/engine.hpp"

namespace borderdef {

using RewardMode = Mode;

/// Heading (cos(a*pi), sin(a*pi)) for an action clamped to [-1, 1].
Point2 decode_action(double a);

struct Observation {
  std::vector<double> values;
  Phase layout = Phase::Search;
};

/// Defender positions before sensing; defender positions then the attacker
/// from the sensing step on. Identical for every defender.
Observation observe(const GameState& state, const GameConfig& config, std::size_t defender_index);

/// Fixed network input width: 2 (n_d + 1) coordinates plus a pursuit flag.
inline std::size_t padded_width(std::size_t n_defenders) { return 2 * (n_defenders + 1) + 1; }

/// Zero-pads a search-layout observation to the pursuit width and appends
/// the layout flag (0 search, 1 pursuit).
void write_padded(const Observation& obs, std::size_t n_defenders, std::span<double> out);

/// Full state for the centralized critic; same layout as a padded
/// pursuit observation but the attacker is always present.
void write_global_state(const GameState& state, std::span<double> out);

double gt_reward(const GameState& sensed_state, const GameConfig& config);
double standard_reward(const StepOutcome& outcome);

/// Terminal reward of a finished episode under `mode`.
double episode_reward(const EpisodeRecord& record, Mode mode);

/// Steps of pursuit skipped per sensed episode when terminating at sensing,
/// from a head-on chase closing the gap between the sensing and capture
/// radii of defender 0.
double saved_steps_estimate(const GameConfig& config);

struct EpisodeInfo {
  std::size_t slot = 0;
  std::uint64_t episode = 0;
  Terminal terminal = Terminal::None;
  double reward = 0.0;
  int length = 0;
  std::optional<int> sensing_step;
  std::optional<double> nash_at_sensing;
  double final_attacker_y = 0.0;
};

struct BatchStep {
  /// n_envs x n_defenders x obs_width, post-reset for finished slots.
  std::vector<double> observations;
  /// n_envs x state_width.
  std::vector<double> states;
  /// n_envs x n_defenders; equal across defenders.
  std::vector<double> rewards;
  std::vector<std::uint8_t> dones;
  std::vector<EpisodeInfo> infos;
};

class BatchEnv {
 public:
  BatchEnv(GameConfig config, RewardMode mode, std::size_t n_envs, std::uint64_t seed, double gamma = 0.99);

  /// Respawns every slot, restarting all episode counters.
  void reset();
  /// `actions` is n_envs x n_defenders, row-major.
  BatchStep step(std::span<const double> actions);

  std::size_t n_envs() const { return slots_.size(); }
  std::size_t n_defenders() const { return config_.n_defenders(); }
  std::size_t obs_width() const { return padded_width(n_defenders()); }
  std::size_t state_width() const { return padded_width(n_defenders()); }
  RewardMode mode() const { return mode_; }
  double gamma() const { return gamma_; }
  const GameConfig& config() const { return config_; }
  const GameState& state(std::size_t slot) const { return slots_[slot].state; }

  void write_observations(std::span<double> out) const;
  void write_states(std::span<double> out) const;
  std::vector<double> observations() const;
  std::vector<double> states() const;

 private:
  struct Slot {
    GameState state;
    std::uint64_t episode = 0;
    std::optional<double> nash_at_sensing;
  };

  void respawn(std::size_t i);

  GameConfig config_;
  RewardMode mode_;
  std::uint64_t seed_;
  double gamma_;
  std::vector<Slot> slots_;
};

}  // namespace borderdef
