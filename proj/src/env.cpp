#include "borderdef/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace borderdef {

Point2 decode_action(double a) {
  if (std::isnan(a)) a = 0.0;
  a = std::clamp(a, -1.0, 1.0);
  return {std::cos(a * std::numbers::pi), std::sin(a * std::numbers::pi)};
}

Observation observe(const GameState& state, const GameConfig& config, std::size_t defender_index) {
  if (defender_index >= config.n_defenders()) throw std::out_of_range("observe: defender index out of range");
  Observation obs;
  obs.layout = state.phase;
  obs.values.reserve(2 * (state.defenders.size() + 1));
  for (const auto& d : state.defenders) {
    obs.values.push_back(d.x);
    obs.values.push_back(d.y);
  }
  if (state.sensed()) {
    obs.values.push_back(state.attacker.x);
    obs.values.push_back(state.attacker.y);
  }
  return obs;
}

void write_padded(const Observation& obs, std::size_t n_defenders, std::span<double> out) {
  const std::size_t width = padded_width(n_defenders);
  if (out.size() != width) throw std::invalid_argument("write_padded: output width mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  std::copy(obs.values.begin(), obs.values.end(), out.begin());
  out[width - 1] = obs.layout == Phase::Pursuit ? 1.0 : 0.0;
}

void write_global_state(const GameState& state, std::span<double> out) {
  const std::size_t width = padded_width(state.defenders.size());
  if (out.size() != width) throw std::invalid_argument("write_global_state: output width mismatch");
  std::size_t k = 0;
  for (const auto& d : state.defenders) {
    out[k++] = d.x;
    out[k++] = d.y;
  }
  out[k++] = state.attacker.x;
  out[k++] = state.attacker.y;
  out[k] = state.sensed() ? 1.0 : 0.0;
}

double gt_reward(const GameState& sensed_state, const GameConfig& config) {
  return nash_at(sensed_state, config).payoff;
}

double standard_reward(const StepOutcome& outcome) {
  if (outcome.terminal == Terminal::None) return 0.0;
  return std::max(0.0, outcome.next.attacker.y);
}

double episode_reward(const EpisodeRecord& record, Mode mode) {
  if (mode == Mode::Standard) return record.payoff_y;
  switch (record.terminal) {
    case Terminal::Sensed: return record.nash_at_sensing.value_or(0.0);
    // Capture without prior sensing needs a capture radius above the
    // sensing radius; the realised payoff is the exact outcome.
    case Terminal::Captured: return record.payoff_y;
    default: return 0.0;
  }
}

double saved_steps_estimate(const GameConfig& config) {
  const DefenderSpec& d = config.defenders.at(0);
  if (!(d.speed > config.attacker_speed)) throw std::invalid_argument("saved_steps_estimate: need v_D > v_A");
  return ((d.sensing_radius - d.capture_radius) / (d.speed - config.attacker_speed)) / config.dt;
}

BatchEnv::BatchEnv(GameConfig config, RewardMode mode, std::size_t n_envs, std::uint64_t seed, double gamma)
    : config_(std::move(config)), mode_(mode), seed_(seed), gamma_(gamma) {
  config_.validate();
  if (n_envs == 0) throw std::invalid_argument("BatchEnv: need at least one slot");
  slots_.resize(n_envs);
  reset();
}

void BatchEnv::respawn(std::size_t i) {
  Slot& s = slots_[i];
  Rng rng = make_rng(seed_, i, s.episode);
  s.state = spawn(config_, rng);
  s.nash_at_sensing.reset();
  if (s.state.sensed()) s.nash_at_sensing = gt_reward(s.state, config_);
}

void BatchEnv::reset() {
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    slots_[i].episode = 0;
    respawn(i);
  }
}

BatchStep BatchEnv::step(std::span<const double> actions) {
  const std::size_t n = slots_.size();
  const std::size_t nd = n_defenders();
  if (actions.size() != n * nd) {
    throw std::invalid_argument("BatchEnv::step: expected " + std::to_string(n * nd) + " actions, got " +
                                std::to_string(actions.size()));
  }
  const bool gt = mode_ == Mode::GtAssisted;
  BatchStep out;
  out.rewards.assign(n * nd, 0.0);
  out.dones.assign(n, 0);

  std::vector<Point2> controls(nd);
  for (std::size_t i = 0; i < n; ++i) {
    Slot& slot = slots_[i];
    Terminal terminal = Terminal::None;
    double reward = 0.0;

    if (gt && slot.state.sensed()) {
      // Sensed at spawn: the episode ends before any move.
      terminal = Terminal::Sensed;
      slot.state.terminal = terminal;
      reward = slot.nash_at_sensing.value_or(0.0);
    } else {
      for (std::size_t k = 0; k < nd; ++k) controls[k] = decode_action(actions[i * nd + k]);
      const Point2 a = attacker_control(slot.state, config_);
      StepOutcome o = borderdef::step(slot.state, config_, controls, a, gt);
      if (o.sensed_now) slot.nash_at_sensing = gt_reward(o.next, config_);
      terminal = o.terminal;
      if (terminal != Terminal::None) {
        if (!gt) {
          reward = standard_reward(o);
        } else if (terminal == Terminal::Sensed) {
          reward = slot.nash_at_sensing.value_or(0.0);
        } else if (terminal == Terminal::Captured) {
          reward = standard_reward(o);
        }
      }
      slot.state = std::move(o.next);
    }

    if (terminal == Terminal::None) continue;
    std::fill_n(out.rewards.begin() + static_cast<std::ptrdiff_t>(i * nd), nd, reward);
    out.dones[i] = 1;
    EpisodeInfo info;
    info.slot = i;
    info.episode = slot.episode;
    info.terminal = terminal;
    info.reward = reward;
    info.length = slot.state.step;
    info.sensing_step = slot.state.sensing_step;
    info.nash_at_sensing = slot.nash_at_sensing;
    info.final_attacker_y = slot.state.attacker.y;
    out.infos.push_back(info);
    ++slot.episode;
    respawn(i);
  }
  out.observations = observations();
  out.states = states();
  return out;
}

void BatchEnv::write_observations(std::span<double> out) const {
  const std::size_t nd = n_defenders();
  const std::size_t w = obs_width();
  if (out.size() != slots_.size() * nd * w) throw std::invalid_argument("write_observations: size mismatch");
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    // Observations are shared, so one encoding serves every defender.
    const Observation obs = observe(slots_[i].state, config_, 0);
    for (std::size_t k = 0; k < nd; ++k) write_padded(obs, nd, out.subspan((i * nd + k) * w, w));
  }
}

void BatchEnv::write_states(std::span<double> out) const {
  const std::size_t w = state_width();
  if (out.size() != slots_.size() * w) throw std::invalid_argument("write_states: size mismatch");
  for (std::size_t i = 0; i < slots_.size(); ++i) write_global_state(slots_[i].state, out.subspan(i * w, w));
}

std::vector<double> BatchEnv::observations() const {
  std::vector<double> v(slots_.size() * n_defenders() * obs_width());
  write_observations(v);
  return v;
}

std::vector<double> BatchEnv::states() const {
  std::vector<double> v(slots_.size() * state_width());
  write_states(v);
  return v;
}

}  // namespace borderdef
