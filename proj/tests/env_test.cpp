#include "borderdef/env.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace borderdef {
namespace {

TEST(DecodeAction, Headings) {
  const Point2 zero = decode_action(0.0);
  EXPECT_DOUBLE_EQ(zero.x, 1.0);
  EXPECT_DOUBLE_EQ(zero.y, 0.0);
  const Point2 down = decode_action(-0.5);
  EXPECT_NEAR(down.x, 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(down.y, -1.0);
  const Point2 a = decode_action(1.0);
  const Point2 b = decode_action(-1.0);
  EXPECT_DOUBLE_EQ(a.x, -1.0);
  EXPECT_DOUBLE_EQ(b.x, -1.0);
  EXPECT_NEAR(a.y, b.y, 1e-15);
}

TEST(DecodeAction, OutOfRangeAndNan) {
  EXPECT_EQ(decode_action(7.0), decode_action(1.0));
  EXPECT_EQ(decode_action(-3.0), decode_action(-1.0));
  EXPECT_EQ(decode_action(NAN), decode_action(0.0));
  EXPECT_NEAR(decode_action(0.37).norm(), 1.0, 1e-15);
}

GameState three_defender_state(Phase phase) {
  GameState s;
  s.defenders = {{0.1, 0.05}, {0.5, 0.06}, {0.9, 0.07}};
  s.attacker = {0.4, 0.6};
  s.phase = phase;
  if (phase == Phase::Pursuit) s.sensing_step = 3;
  return s;
}

TEST(Observe, SearchLayout) {
  const GameConfig c = reference_config(3);
  const Observation o = observe(three_defender_state(Phase::Search), c, 0);
  EXPECT_EQ(o.values.size(), 6u);
  EXPECT_EQ(o.layout, Phase::Search);
  EXPECT_EQ(o.values[2], 0.5);
}

TEST(Observe, PursuitLayout) {
  const GameConfig c = reference_config(3);
  const Observation o = observe(three_defender_state(Phase::Pursuit), c, 0);
  ASSERT_EQ(o.values.size(), 8u);
  EXPECT_EQ(o.values[6], 0.4);
  EXPECT_EQ(o.values[7], 0.6);
}

TEST(Observe, SharedAcrossDefenders) {
  const GameConfig c = reference_config(3);
  const GameState s = three_defender_state(Phase::Pursuit);
  EXPECT_EQ(observe(s, c, 1).values, observe(s, c, 2).values);
  EXPECT_THROW(observe(s, c, 3), std::out_of_range);
}

TEST(Observe, PaddedEncoding) {
  const GameConfig c = reference_config(3);
  std::vector<double> out(padded_width(3));
  write_padded(observe(three_defender_state(Phase::Search), c, 0), 3, out);
  EXPECT_EQ(out[6], 0.0);
  EXPECT_EQ(out[7], 0.0);
  EXPECT_EQ(out[8], 0.0);
  write_padded(observe(three_defender_state(Phase::Pursuit), c, 0), 3, out);
  EXPECT_EQ(out[7], 0.6);
  EXPECT_EQ(out[8], 1.0);
  std::vector<double> wrong(4);
  EXPECT_THROW(write_padded(observe(three_defender_state(Phase::Search), c, 0), 3, wrong), std::invalid_argument);
}

TEST(Observe, GlobalStateAlwaysHasAttacker) {
  std::vector<double> out(padded_width(3));
  write_global_state(three_defender_state(Phase::Search), out);
  EXPECT_EQ(out[6], 0.4);
  EXPECT_EQ(out[7], 0.6);
  EXPECT_EQ(out[8], 0.0);
}

TEST(Rewards, GtRewardMatchesGeometry) {
  const GameConfig c = reference_config(1);
  GameState s;
  s.defenders = {{0.5, 0.05}};
  s.attacker = {0.5, 0.95};
  s.phase = Phase::Pursuit;
  EXPECT_NEAR(gt_reward(s, c), 0.7421, 1e-4);
  s.attacker = {0.5, 0.1};
  s.defenders = {{0.5, 0.35}};
  EXPECT_EQ(gt_reward(s, c), 0.0);
}

TEST(Rewards, StandardReadout) {
  StepOutcome o;
  o.terminal = Terminal::Captured;
  o.next.attacker = {0.3, 0.42};
  EXPECT_EQ(standard_reward(o), 0.42);
  o.terminal = Terminal::Breached;
  o.next.attacker = {0.3, -0.003};
  EXPECT_EQ(standard_reward(o), 0.0);
  o.terminal = Terminal::Timeout;
  o.next.attacker = {0.3, 0.9};
  EXPECT_EQ(standard_reward(o), 0.9);
  o.terminal = Terminal::None;
  EXPECT_EQ(standard_reward(o), 0.0);
}

TEST(SavedSteps, ReferenceValue) {
  const GameConfig c = reference_config(1);
  EXPECT_NEAR(saved_steps_estimate(c), (0.23 / 0.233) / 0.05, 1e-12);
  EXPECT_NEAR(saved_steps_estimate(c), 19.7, 0.05);
  GameConfig eq = c;
  eq.defenders[0].capture_radius = eq.defenders[0].sensing_radius;
  EXPECT_EQ(saved_steps_estimate(eq), 0.0);
  GameConfig twice = c;
  twice.dt = 2.0 * c.dt;
  EXPECT_NEAR(saved_steps_estimate(twice), 0.5 * saved_steps_estimate(c), 1e-12);
}

TEST(BatchEnv, FreshSpawnZeroActionsIsQuiet) {
  BatchEnv env(reference_config(3), Mode::Standard, 16, 1);
  std::vector<double> actions(16 * 3, 0.0);
  const BatchStep out = env.step(actions);
  EXPECT_EQ(out.observations.size(), 16u * 3u * env.obs_width());
  EXPECT_EQ(out.states.size(), 16u * env.state_width());
  for (double r : out.rewards) EXPECT_EQ(r, 0.0);
  for (auto d : out.dones) EXPECT_EQ(d, 0);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(env.state(i).step, 1);
}

TEST(BatchEnv, GtSensingEndsSlotWithNashReward) {
  GameConfig c = reference_config(1);
  c.attacker_spawn = {0.5, 0.5, 0.95, 0.95};
  c.defender_spawn = {0.5, 0.5, 0.64, 0.64};
  BatchEnv env(c, Mode::GtAssisted, 2, 3);
  GameState expected = env.state(0);
  const std::vector<double> actions(2, 0.5);
  const BatchStep out = env.step(actions);
  ASSERT_EQ(out.dones[0], 1);
  ASSERT_EQ(out.infos.size(), 2u);
  EXPECT_EQ(out.infos[0].terminal, Terminal::Sensed);
  // Attacker to 0.945, defender up to 0.65665: 0.288 apart after the move.
  expected.attacker.y -= c.attacker_speed * c.dt;
  expected.defenders[0].y += c.defenders[0].speed * c.dt;
  expected.phase = Phase::Pursuit;
  EXPECT_NEAR(out.rewards[0], gt_reward(expected, c), 1e-12);
  EXPECT_EQ(out.infos[0].reward, out.rewards[0]);
  EXPECT_EQ(env.state(0).step, 0);
}

TEST(BatchEnv, StandardAutoResetsAndRewardsAtTerminal) {
  GameConfig c = reference_config(1);
  c.max_steps = 5;
  BatchEnv env(c, Mode::Standard, 3, 4);
  const std::vector<double> actions(3, 0.5);
  for (int k = 0; k < 4; ++k) {
    const BatchStep out = env.step(actions);
    for (auto d : out.dones) EXPECT_EQ(d, 0);
  }
  const BatchStep out = env.step(actions);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(out.dones[i], 1);
    EXPECT_EQ(out.infos[i].terminal, Terminal::Timeout);
    EXPECT_EQ(out.rewards[i], out.infos[i].final_attacker_y);
    EXPECT_GT(out.rewards[i], 0.85);
    EXPECT_EQ(env.state(i).step, 0);
  }
}

TEST(BatchEnv, SpawnSensedGtSlotEndsWithoutMoving) {
  GameConfig c = reference_config(1);
  c.attacker_spawn = {0.5, 0.5, 0.95, 0.95};
  c.defender_spawn = {0.5, 0.5, 0.8, 0.8};
  BatchEnv env(c, Mode::GtAssisted, 1, 5);
  ASSERT_TRUE(env.state(0).sensed());
  const BatchStep out = env.step(std::vector<double>{0.0});
  ASSERT_EQ(out.infos.size(), 1u);
  EXPECT_EQ(out.infos[0].length, 0);
  EXPECT_EQ(out.infos[0].sensing_step, 0);
  EXPECT_NEAR(out.rewards[0], 0.95 - 0.15 / 4.33, 1e-12);
}

TEST(BatchEnv, DeterministicAndSizeChecked) {
  BatchEnv a(reference_config(3), Mode::GtAssisted, 4, 9);
  BatchEnv b(reference_config(3), Mode::GtAssisted, 4, 9);
  EXPECT_EQ(a.observations(), b.observations());
  EXPECT_THROW(a.step(std::vector<double>(5, 0.0)), std::invalid_argument);
  std::vector<double> actions(12);
  for (int t = 0; t < 200; ++t) {
    for (std::size_t k = 0; k < actions.size(); ++k) actions[k] = std::sin(0.1 * t + static_cast<double>(k));
    const BatchStep x = a.step(actions);
    const BatchStep y = b.step(actions);
    ASSERT_EQ(x.observations, y.observations);
    ASSERT_EQ(x.rewards, y.rewards);
  }
}

}  // namespace
}  // namespace borderdef
