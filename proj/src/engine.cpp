#include "borderdef/engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace borderdef {

namespace {

constexpr double kControlSlack = 1e-9;

void check_control(const Point2& u, const char* who) {
  if (!u.finite() || u.norm() > 1.0 + kControlSlack) {
    throw std::invalid_argument(std::string("step: control for ") + who + " must satisfy |u| <= 1");
  }
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

double sample_in(double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return lo + (hi - lo) * unit(rng);
}

void check_rect(const Rect& r, const char* name) {
  const bool ok = r.x_min <= r.x_max && r.y_min <= r.y_max && r.x_min >= 0.0 && r.x_max <= 1.0 && r.y_min >= 0.0 &&
                  r.y_max <= 1.0;
  if (!ok) throw ConfigError(std::string(name) + " must be a rectangle inside [0,1]x[0,1]");
}

Point2 toward(const Point2& from, const Point2& to, double reach) {
  const Point2 d = to - from;
  const double len = d.norm();
  if (len == 0.0) return {0.0, 0.0};
  if (len <= reach) return d * (1.0 / reach);
  return d * (1.0 / len);
}

}  // namespace

Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32)};
  return Rng(seq);
}

void GameConfig::validate() const {
  if (!(attacker_speed > 0.0)) throw ConfigError("attacker_speed must be positive");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (max_steps < 1) throw ConfigError("max_steps must be at least 1");
  if (defenders.empty()) throw ConfigError("at least one defender is required");
  check_rect(attacker_spawn, "attacker_spawn");
  check_rect(defender_spawn, "defender_spawn");
  for (std::size_t i = 0; i < defenders.size(); ++i) {
    const auto& d = defenders[i];
    const std::string tag = "defender " + std::to_string(i) + ": ";
    if (!(d.speed > attacker_speed)) throw ConfigError(tag + "speed must exceed the attacker speed");
    if (!(d.sensing_radius >= 0.0)) throw ConfigError(tag + "sensing_radius must be >= 0");
    if (!(d.capture_radius >= 0.0)) throw ConfigError(tag + "capture_radius must be >= 0");
  }
}

double GameConfig::capture_reach(std::size_t i) const {
  return std::max(defenders[i].capture_radius, defenders[i].speed * dt);
}

GameConfig reference_config(std::size_t n_defenders) {
  GameConfig c;
  c.attacker_speed = 0.1;
  c.dt = 0.05;
  c.max_steps = static_cast<int>(std::lround(2.0 / (c.attacker_speed * c.dt)));
  DefenderSpec d;
  d.speed = 3.33 * c.attacker_speed;
  d.sensing_radius = n_defenders == 1 ? 0.3 : 0.15;
  d.capture_radius = 0.07;
  c.defenders.assign(n_defenders, d);
  return c;
}

std::string to_string(Phase p) { return p == Phase::Search ? "search" : "pursuit"; }

std::string to_string(Terminal t) {
  switch (t) {
    case Terminal::None: return "none";
    case Terminal::Sensed: return "sensed";
    case Terminal::Captured: return "captured";
    case Terminal::Breached: return "breached";
    case Terminal::Timeout: return "timeout";
  }
  return "none";
}

std::string to_string(Mode m) { return m == Mode::GtAssisted ? "gt" : "standard"; }

Mode parse_mode(const std::string& s) {
  if (s == "gt" || s == "gt_assisted") return Mode::GtAssisted;
  if (s == "standard") return Mode::Standard;
  throw ConfigError("unknown reward mode '" + s + "' (expected gt or standard)");
}

std::optional<std::size_t> sensing_defender(const GameState& state, const GameConfig& config) {
  for (std::size_t i = 0; i < state.defenders.size(); ++i) {
    if (distance(state.attacker, state.defenders[i]) <= config.defenders[i].sensing_radius) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> capturing_defender(const GameState& state, const GameConfig& config) {
  for (std::size_t i = 0; i < state.defenders.size(); ++i) {
    if (!config.defenders[i].can_capture) continue;
    if (distance(state.attacker, state.defenders[i]) <= config.capture_reach(i)) return i;
  }
  return std::nullopt;
}

GameState spawn(const GameConfig& config, Rng& rng) {
  GameState s;
  s.attacker = {sample_in(config.attacker_spawn.x_min, config.attacker_spawn.x_max, rng),
                sample_in(config.attacker_spawn.y_min, config.attacker_spawn.y_max, rng)};
  s.defenders.reserve(config.n_defenders());
  for (std::size_t i = 0; i < config.n_defenders(); ++i) {
    const double x = sample_in(config.defender_spawn.x_min, config.defender_spawn.x_max, rng);
    const double y = sample_in(config.defender_spawn.y_min, config.defender_spawn.y_max, rng);
    s.defenders.push_back({x, y});
  }
  if (sensing_defender(s, config)) {
    s.phase = Phase::Pursuit;
    s.sensing_step = 0;
  }
  return s;
}

StepOutcome step(const GameState& state, const GameConfig& config, const std::vector<Point2>& defender_controls,
                 const Point2& attacker_control, bool sensing_terminates) {
  if (state.done()) throw std::logic_error("step: state is already terminal");
  if (defender_controls.size() != state.defenders.size()) {
    throw std::invalid_argument("step: expected " + std::to_string(state.defenders.size()) + " defender controls, got " +
                                std::to_string(defender_controls.size()));
  }
  for (const auto& u : defender_controls) check_control(u, "defender");
  check_control(attacker_control, "attacker");

  StepOutcome out;
  GameState& next = out.next;
  next = state;
  for (std::size_t i = 0; i < next.defenders.size(); ++i) {
    const Point2 p = next.defenders[i] + defender_controls[i] * (config.defenders[i].speed * config.dt);
    next.defenders[i] = {clamp01(p.x), clamp01(p.y)};
  }
  const Point2 a = next.attacker + attacker_control * (config.attacker_speed * config.dt);
  next.attacker = {clamp01(a.x), a.y};
  next.step = state.step + 1;

  const bool newly_sensed = !state.sensed() && sensing_defender(next, config).has_value();
  if (newly_sensed) {
    next.phase = Phase::Pursuit;
    next.sensing_step = next.step;
    out.sensed_now = true;
  }

  if (capturing_defender(next, config)) {
    out.terminal = Terminal::Captured;
  } else if (next.attacker.y <= 0.0) {
    out.terminal = Terminal::Breached;
  } else if (newly_sensed && sensing_terminates) {
    out.terminal = Terminal::Sensed;
  } else if (next.step >= config.max_steps) {
    out.terminal = Terminal::Timeout;
  }
  next.terminal = out.terminal;
  if (out.terminal != Terminal::None) out.payoff_y = std::max(0.0, next.attacker.y);
  return out;
}

PursuitConfig pursuit_config(const GameState& state, const GameConfig& config) {
  PursuitConfig pc;
  pc.attacker = state.attacker;
  for (std::size_t i = 0; i < state.defenders.size(); ++i) {
    if (config.defenders[i].can_capture) pc.capture_defenders.push_back({state.defenders[i], config.speed_ratio(i)});
  }
  return pc;
}

NashSolution nash_at(const GameState& state, const GameConfig& config) {
  const PursuitConfig pc = pursuit_config(state, config);
  if (pc.capture_defenders.empty()) return NashSolution{};
  return nash_payoff_multi(pc);
}

Point2 attacker_phase1_control() { return {0.0, -1.0}; }

Point2 attacker_phase2_control(const GameState& state, const GameConfig& config) {
  const PursuitConfig pc = pursuit_config(state, config);
  if (pc.capture_defenders.empty()) return attacker_phase1_control();
  const Point2 target = nash_payoff_multi(pc).intercept_point;
  const Point2 d = target - state.attacker;
  const double len = d.norm();
  if (len <= config.attacker_speed * config.dt) return attacker_phase1_control();
  return d * (1.0 / len);
}

Point2 attacker_control(const GameState& state, const GameConfig& config) {
  return state.sensed() ? attacker_phase2_control(state, config) : attacker_phase1_control();
}

std::vector<Point2> defender_optimal_pursuit(const GameState& state, const GameConfig& config) {
  std::vector<Point2> controls(state.defenders.size(), Point2{0.0, 0.0});
  const PursuitConfig pc = pursuit_config(state, config);
  if (pc.capture_defenders.empty()) return controls;
  const Point2 target = nash_payoff_multi(pc).intercept_point;
  for (std::size_t i = 0; i < state.defenders.size(); ++i) {
    if (!config.defenders[i].can_capture) continue;
    controls[i] = toward(state.defenders[i], target, config.defenders[i].speed * config.dt);
  }
  return controls;
}

std::string to_string(SearchPattern p) { return p == SearchPattern::Hold ? "hold" : "sweep"; }

SearchPattern parse_search_pattern(const std::string& s) {
  if (s == "hold") return SearchPattern::Hold;
  if (s == "sweep") return SearchPattern::Sweep;
  throw ConfigError("unknown search pattern '" + s + "' (expected hold or sweep)");
}

DefenderPolicy scripted_policy(SearchPattern search) {
  return [search](const GameState& s, const GameConfig& c) {
    if (s.sensed()) return defender_optimal_pursuit(s, c);
    std::vector<Point2> u(s.defenders.size(), Point2{0.0, 0.0});
    if (search == SearchPattern::Sweep) {
      for (std::size_t i = 0; i < u.size(); ++i) {
        // Alternate direction per defender so a team fans out.
        const int period = std::max(1, static_cast<int>(std::ceil(1.0 / (c.defenders[i].speed * c.dt))));
        const bool right = ((s.step / period) + static_cast<int>(i)) % 2 == 0;
        u[i] = {right ? 1.0 : -1.0, 0.0};
      }
    }
    return u;
  };
}

namespace {

TraceStep trace_of(const GameState& s, std::vector<Point2> dc, Point2 ac) {
  return {s.step, s.defenders, s.attacker, std::move(dc), ac, s.phase, s.terminal};
}

void note_sensing(EpisodeRecord& rec, const GameState& s, const GameConfig& config) {
  rec.sensing_step = s.sensing_step;
  rec.sensed_state = s;
  rec.nash_at_sensing = nash_at(s, config).payoff;
}

EpisodeRecord drive(GameState state, const GameConfig& config, const DefenderPolicy& policy, Mode mode) {
  const bool gt = mode == Mode::GtAssisted;
  EpisodeRecord rec;
  const std::size_t n = state.defenders.size();
  if (state.sensed()) note_sensing(rec, state, config);
  if (gt && state.sensed()) state.terminal = Terminal::Sensed;
  rec.trace.push_back(trace_of(state, std::vector<Point2>(n, Point2{}), Point2{}));

  while (!state.done()) {
    std::vector<Point2> controls;
    try {
      controls = policy(state, config);
    } catch (const std::exception& e) {
      throw std::runtime_error("defender policy failed at step " + std::to_string(state.step) + ": " + e.what());
    }
    const Point2 a = attacker_control(state, config);
    StepOutcome out = step(state, config, controls, a, gt);
    state = std::move(out.next);
    if (out.sensed_now) note_sensing(rec, state, config);
    rec.trace.push_back(trace_of(state, std::move(controls), a));
  }
  rec.terminal = state.terminal;
  rec.payoff_y = std::max(0.0, state.attacker.y);
  rec.length = state.step;
  return rec;
}

}  // namespace

EpisodeRecord run_episode(const GameConfig& config, const DefenderPolicy& policy, Mode mode, Rng& rng) {
  config.validate();
  return drive(spawn(config, rng), config, policy, mode);
}

EpisodeRecord play_out(const GameState& state, const GameConfig& config, const DefenderPolicy& policy, Mode mode) {
  return drive(state, config, policy, mode);
}

}  // namespace borderdef
