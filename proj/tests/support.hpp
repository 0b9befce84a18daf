// Shared generators for engine-level tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "borderdef/engine.hpp"

namespace borderdef::testing {

/// Reference team with overridden capture radius and time step.
inline GameConfig pursuit_config_for(std::size_t n_defenders, double capture_radius, double dt) {
  GameConfig c = reference_config(n_defenders);
  c.dt = dt;
  c.max_steps = 1000000;
  for (auto& d : c.defenders) {
    d.capture_radius = capture_radius;
    d.sensing_radius = 0.3;
  }
  return c;
}

/// A state at the sensing instant: defender 0 sits exactly on its sensing
/// circle around the attacker, the others anywhere in the domain. States
/// whose open-plane intercept point falls outside the domain are redrawn;
/// there the wall, not the Apollonius geometry, decides the outcome.
inline GameState random_sensed_state(const GameConfig& config, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GameState s;
  s.defenders.resize(config.n_defenders());
  for (;;) {
    s.attacker = {u(rng), 0.2 + 0.8 * u(rng)};
    const double th = 2.0 * std::numbers::pi * u(rng);
    const double r = config.defenders[0].sensing_radius;
    const Point2 p = s.attacker + Point2{std::cos(th), std::sin(th)} * r;
    if (p.x < 0.0 || p.x > 1.0 || p.y < 0.0 || p.y > 1.0) continue;
    s.defenders[0] = p;
    bool too_close = false;
    for (std::size_t i = 1; i < s.defenders.size(); ++i) {
      s.defenders[i] = {u(rng), u(rng)};
      if (distance(s.defenders[i], s.attacker) <= config.capture_reach(i)) too_close = true;
    }
    if (too_close) continue;
    s.phase = Phase::Pursuit;
    s.sensing_step = 0;
    const Point2 p_star = nash_at(s, config).intercept_point;
    if (p_star.x < 0.0 || p_star.x > 1.0) continue;
    return s;
  }
}

}  // namespace borderdef::testing
