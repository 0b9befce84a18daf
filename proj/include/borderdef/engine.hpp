// Game physics for the border-defense pursuit-evasion game: single-integrator
// kinematics on the unit square, spawning, sensing, terminal checks, and the
// scripted attacker and optimal-pursuit controllers.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "borderdef/geometry.hpp"

namespace borderdef {

using Rng = std::mt19937_64;

/// Independent stream for (seed, stream, counter); used for per-slot and
/// per-episode generators.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t counter = 0);

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Rect {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;

  bool contains(const Point2& p) const { return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max; }
};

struct DefenderSpec {
  double speed = 0.333;
  double sensing_radius = 0.3;
  double capture_radius = 0.07;
  /// Sensing-only defenders never capture and are left out of the payoff.
  bool can_capture = true;
};

struct GameConfig {
  double attacker_speed = 0.1;
  Rect attacker_spawn{0.0, 1.0, 0.9, 1.0};
  Rect defender_spawn{0.0, 1.0, 0.0, 0.1};
  std::vector<DefenderSpec> defenders{DefenderSpec{}};
  double dt = 0.05;
  int max_steps = 400;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t n_defenders() const { return defenders.size(); }
  double speed_ratio(std::size_t i) const { return defenders[i].speed / attacker_speed; }
  /// Distance at which defender i captures. Point capture (radius 0) is
  /// resolved at the scale of one defender step.
  double capture_reach(std::size_t i) const;
};

/// Homogeneous scenario with the reference environment parameters:
/// nu = 3.33, capture radius 0.07, dt = 0.05, T_max = 2 / (v_A dt), and a
/// sensing radius of 0.3 for a single defender or 0.15 for teams.
GameConfig reference_config(std::size_t n_defenders);

enum class Phase { Search, Pursuit };
enum class Terminal { None, Sensed, Captured, Breached, Timeout };
enum class Mode { GtAssisted, Standard };

std::string to_string(Phase p);
std::string to_string(Terminal t);
std::string to_string(Mode m);
Mode parse_mode(const std::string& s);

struct GameState {
  std::vector<Point2> defenders;
  Point2 attacker;
  int step = 0;
  Phase phase = Phase::Search;
  std::optional<int> sensing_step;
  Terminal terminal = Terminal::None;

  bool sensed() const { return phase == Phase::Pursuit; }
  bool done() const { return terminal != Terminal::None; }
};

struct StepOutcome {
  GameState next;
  Terminal terminal = Terminal::None;
  /// max(0, attacker y) at termination; empty while the game continues.
  std::optional<double> payoff_y;
  /// Sensing first occurred on this step.
  bool sensed_now = false;
};

GameState spawn(const GameConfig& config, Rng& rng);

/// Index of the first defender whose sensing disk contains the attacker.
std::optional<std::size_t> sensing_defender(const GameState& state, const GameConfig& config);
std::optional<std::size_t> capturing_defender(const GameState& state, const GameConfig& config);

/// Euler step followed by terminal checks in the order capture, breach,
/// sensing (terminal only when `sensing_terminates`), timeout.
StepOutcome step(const GameState& state, const GameConfig& config, const std::vector<Point2>& defender_controls,
                 const Point2& attacker_control, bool sensing_terminates = false);

/// Pursuit configuration over the capture-capable defenders of `state`.
PursuitConfig pursuit_config(const GameState& state, const GameConfig& config);

/// Nash payoff at `state`; 0 when no defender can capture.
NashSolution nash_at(const GameState& state, const GameConfig& config);

Point2 attacker_phase1_control();
Point2 attacker_phase2_control(const GameState& state, const GameConfig& config);
Point2 attacker_control(const GameState& state, const GameConfig& config);
std::vector<Point2> defender_optimal_pursuit(const GameState& state, const GameConfig& config);

using DefenderPolicy = std::function<std::vector<Point2>(const GameState&, const GameConfig&)>;

enum class SearchPattern { Hold, Sweep };

std::string to_string(SearchPattern p);
SearchPattern parse_search_pattern(const std::string& s);

/// Optimal pursuit once the attacker is sensed. Before that, defenders
/// either hold position or sweep sideways, turning every domain width.
DefenderPolicy scripted_policy(SearchPattern search = SearchPattern::Hold);

struct TraceStep {
  int step = 0;
  std::vector<Point2> defenders;
  Point2 attacker;
  std::vector<Point2> defender_controls;
  Point2 attacker_control;
  Phase phase = Phase::Search;
  Terminal terminal = Terminal::None;
};

struct EpisodeRecord {
  std::vector<TraceStep> trace;
  Terminal terminal = Terminal::None;
  /// max(0, attacker y) at termination.
  double payoff_y = 0.0;
  std::optional<int> sensing_step;
  std::optional<GameState> sensed_state;
  /// Nash payoff at the sensing configuration, whatever the mode.
  std::optional<double> nash_at_sensing;
  int length = 0;
};

EpisodeRecord run_episode(const GameConfig& config, const DefenderPolicy& policy, Mode mode, Rng& rng);

/// Continue a game from `state` until capture, breach or timeout.
EpisodeRecord play_out(const GameState& state, const GameConfig& config, const DefenderPolicy& policy, Mode mode);

}  // namespace borderdef
