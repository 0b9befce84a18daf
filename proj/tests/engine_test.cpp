#include "borderdef/engine.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

namespace borderdef {
namespace {

GameState two_agent_state(Point2 defender, Point2 attacker) {
  GameState s;
  s.defenders = {defender};
  s.attacker = attacker;
  return s;
}

TEST(Config, ReferenceParameters) {
  const GameConfig one = reference_config(1);
  EXPECT_EQ(one.max_steps, 400);
  EXPECT_DOUBLE_EQ(one.speed_ratio(0), 3.33);
  EXPECT_EQ(one.defenders[0].sensing_radius, 0.3);
  EXPECT_EQ(one.defenders[0].capture_radius, 0.07);
  const GameConfig three = reference_config(3);
  EXPECT_EQ(three.n_defenders(), 3u);
  EXPECT_EQ(three.defenders[2].sensing_radius, 0.15);
  EXPECT_NO_THROW(three.validate());
}

TEST(Config, ValidationRejectsBadValues) {
  GameConfig c = reference_config(1);
  c.defenders[0].speed = 0.05;
  EXPECT_THROW(c.validate(), ConfigError);
  c = reference_config(1);
  c.dt = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = reference_config(1);
  c.max_steps = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = reference_config(1);
  c.attacker_spawn.y_max = 1.2;
  EXPECT_THROW(c.validate(), ConfigError);
  c = reference_config(1);
  c.defenders.clear();
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Spawn, DeterministicForSeed) {
  const GameConfig c = reference_config(3);
  Rng a = make_rng(42, 1, 2);
  Rng b = make_rng(42, 1, 2);
  const GameState s1 = spawn(c, a);
  const GameState s2 = spawn(c, b);
  EXPECT_EQ(s1.attacker, s2.attacker);
  EXPECT_EQ(s1.defenders, s2.defenders);
  EXPECT_EQ(s1.phase, Phase::Search);
  EXPECT_EQ(s1.step, 0);
}

TEST(Spawn, UniformAttackerHeight) {
  const GameConfig c = reference_config(1);
  Rng rng = make_rng(1);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const GameState s = spawn(c, rng);
    ASSERT_TRUE(c.attacker_spawn.contains(s.attacker));
    ASSERT_TRUE(c.defender_spawn.contains(s.defenders[0]));
    sum += s.attacker.y;
  }
  const double mean = sum / n;
  EXPECT_GE(mean, 0.949);
  EXPECT_LE(mean, 0.951);
}

TEST(Spawn, PointMassDefenderRegion) {
  GameConfig c = reference_config(3);
  c.defender_spawn = {0.25, 0.25, 0.05, 0.05};
  Rng rng = make_rng(2);
  const GameState s = spawn(c, rng);
  for (const auto& d : s.defenders) EXPECT_EQ(d, (Point2{0.25, 0.05}));
}

TEST(Spawn, SensingAtTimeZeroIsKept) {
  GameConfig c = reference_config(1);
  c.defender_spawn = {0.5, 0.5, 0.85, 0.85};
  c.attacker_spawn = {0.5, 0.5, 0.95, 0.95};
  Rng rng = make_rng(3);
  const GameState s = spawn(c, rng);
  EXPECT_EQ(s.phase, Phase::Pursuit);
  EXPECT_EQ(s.sensing_step, 0);
}

TEST(Step, CaptureWithinRadius) {
  const GameConfig c = reference_config(1);
  GameState s = two_agent_state({0.5, 0.5}, {0.5, 0.55});
  s.phase = Phase::Pursuit;
  s.sensing_step = 0;
  const StepOutcome o = step(s, c, {{0.0, 0.0}}, {0.0, 0.0});
  EXPECT_EQ(o.terminal, Terminal::Captured);
  ASSERT_TRUE(o.payoff_y);
  EXPECT_DOUBLE_EQ(*o.payoff_y, 0.55);
}

TEST(Step, BreachClampsPayoff) {
  const GameConfig c = reference_config(1);
  const GameState s = two_agent_state({0.1, 0.9}, {0.5, 0.004});
  const StepOutcome o = step(s, c, {{0.0, 0.0}}, attacker_phase1_control());
  EXPECT_EQ(o.terminal, Terminal::Breached);
  EXPECT_LT(o.next.attacker.y, 0.0);
  EXPECT_EQ(*o.payoff_y, 0.0);
}

TEST(Step, CapturePrecedesBreach) {
  const GameConfig c = reference_config(1);
  const GameState s = two_agent_state({0.5, 0.0}, {0.5, 0.004});
  const StepOutcome o = step(s, c, {{0.0, 0.0}}, attacker_phase1_control());
  EXPECT_EQ(o.terminal, Terminal::Captured);
}

TEST(Step, ZeroControlsRunToTimeout) {
  GameConfig c = reference_config(1);
  c.max_steps = 30;
  GameState s = two_agent_state({0.1, 0.05}, {0.9, 0.95});
  const GameState start = s;
  for (int k = 1; k <= 30; ++k) {
    const StepOutcome o = step(s, c, {{0.0, 0.0}}, {0.0, 0.0});
    EXPECT_EQ(o.next.attacker, start.attacker);
    EXPECT_EQ(o.next.defenders, start.defenders);
    EXPECT_EQ(o.terminal, k == 30 ? Terminal::Timeout : Terminal::None);
    s = o.next;
  }
  EXPECT_THROW(step(s, c, {{0.0, 0.0}}, {0.0, 0.0}), std::logic_error);
}

TEST(Step, SensingTerminatesOnlyWhenFlagged) {
  const GameConfig c = reference_config(1);
  const GameState s = two_agent_state({0.5, 0.5}, {0.5, 0.804});
  const StepOutcome plain = step(s, c, {{0.0, 0.0}}, attacker_phase1_control(), false);
  EXPECT_TRUE(plain.sensed_now);
  EXPECT_EQ(plain.terminal, Terminal::None);
  EXPECT_EQ(plain.next.phase, Phase::Pursuit);
  EXPECT_EQ(plain.next.sensing_step, 1);
  const StepOutcome gt = step(s, c, {{0.0, 0.0}}, attacker_phase1_control(), true);
  EXPECT_EQ(gt.terminal, Terminal::Sensed);
}

TEST(Step, RejectsBadControls) {
  const GameConfig c = reference_config(1);
  const GameState s = two_agent_state({0.5, 0.05}, {0.5, 0.95});
  EXPECT_THROW(step(s, c, {{1.0, 1.0}}, {0.0, -1.0}), std::invalid_argument);
  EXPECT_THROW(step(s, c, {{0.0, 0.0}}, {0.0, -1.5}), std::invalid_argument);
  EXPECT_THROW(step(s, c, {}, {0.0, -1.0}), std::invalid_argument);
  EXPECT_THROW(step(s, c, {{NAN, 0.0}}, {0.0, -1.0}), std::invalid_argument);
}

TEST(Step, DefendersClampedToDomain) {
  const GameConfig c = reference_config(1);
  const GameState s = two_agent_state({0.0, 0.0}, {0.5, 0.95});
  const StepOutcome o = step(s, c, {{-1.0, 0.0}}, attacker_phase1_control());
  EXPECT_EQ(o.next.defenders[0], (Point2{0.0, 0.0}));
}

TEST(AttackerPolicy, PhaseOneIsStraightDown) {
  const Point2 u = attacker_phase1_control();
  EXPECT_EQ(u, (Point2{0.0, -1.0}));
  EXPECT_EQ(u.norm(), 1.0);
}

TEST(AttackerPolicy, PhaseTwoSingleDefenderAboveHeadsDown) {
  const GameConfig c = reference_config(1);
  GameState s = two_agent_state({0.5, 0.8}, {0.5, 0.6});
  s.phase = Phase::Pursuit;
  const Point2 u = attacker_phase2_control(s, c);
  EXPECT_NEAR(u.x, 0.0, 1e-15);
  EXPECT_NEAR(u.y, -1.0, 1e-15);
}

TEST(AttackerPolicy, PhaseTwoAtInterceptFallsBackToDescent) {
  const GameConfig c = reference_config(1);
  GameState s = two_agent_state({0.5, 0.5}, {0.5, 0.5});
  s.phase = Phase::Pursuit;
  EXPECT_EQ(attacker_phase2_control(s, c), (Point2{0.0, -1.0}));
}

TEST(AttackerPolicy, PhaseTwoSymmetricDefendersGiveVerticalHeading) {
  const GameConfig c = reference_config(2);
  GameState s;
  s.defenders = {{0.3, 0.2}, {0.7, 0.2}};
  s.attacker = {0.5, 0.8};
  s.phase = Phase::Pursuit;
  const Point2 u = attacker_phase2_control(s, c);
  EXPECT_NEAR(u.x, 0.0, 1e-12);
  EXPECT_LT(u.y, 0.0);
}

TEST(AttackerPolicy, NoCaptureCapabilityMeansDescent) {
  GameConfig c = reference_config(1);
  c.defenders[0].can_capture = false;
  GameState s = two_agent_state({0.5, 0.5}, {0.4, 0.6});
  s.phase = Phase::Pursuit;
  EXPECT_EQ(attacker_phase2_control(s, c), (Point2{0.0, -1.0}));
  EXPECT_EQ(defender_optimal_pursuit(s, c)[0], (Point2{0.0, 0.0}));
}

TEST(DefenderPursuit, AtInterceptHoldsPosition) {
  const GameConfig c = reference_config(1);
  GameState s = two_agent_state({0.5, 0.5}, {0.5, 0.5});
  s.phase = Phase::Pursuit;
  EXPECT_EQ(defender_optimal_pursuit(s, c)[0], (Point2{0.0, 0.0}));
}

TEST(DefenderPursuit, SensingOnlyDefenderStaysPut) {
  GameConfig c = reference_config(2);
  c.defenders[1].can_capture = false;
  GameState s;
  s.defenders = {{0.3, 0.2}, {0.7, 0.2}};
  s.attacker = {0.5, 0.8};
  s.phase = Phase::Pursuit;
  const auto u = defender_optimal_pursuit(s, c);
  EXPECT_GT(u[0].norm(), 0.99);
  EXPECT_EQ(u[1], (Point2{0.0, 0.0}));
}

TEST(DefenderPursuit, SingleDefenderRolloutMatchesNashPayoff) {
  const GameConfig c = testing::pursuit_config_for(1, 0.0, 0.01);
  GameState s = two_agent_state({0.5, 0.05}, {0.5, 0.95});
  s.phase = Phase::Pursuit;
  s.sensing_step = 0;
  const double nash = nash_at(s, c).payoff;
  const EpisodeRecord rec = play_out(s, c, scripted_policy(), Mode::Standard);
  EXPECT_EQ(rec.terminal, Terminal::Captured);
  EXPECT_NEAR(rec.payoff_y, nash, 2.0 * c.defenders[0].speed * c.dt);
}

TEST(DefenderPursuit, RandomSensedStatesAgreeWithNashPayoff) {
  Rng rng = make_rng(21);
  for (int k = 0; k < 200; ++k) {
    const GameConfig c = testing::pursuit_config_for(1 + k % 3, 0.0, 0.01);
    const GameState s = testing::random_sensed_state(c, rng);
    const double nash = nash_at(s, c).payoff;
    const EpisodeRecord rec = play_out(s, c, scripted_policy(), Mode::Standard);
    EXPECT_NEAR(rec.payoff_y, nash, 2.0 * c.defenders[0].speed * c.dt) << "state " << k;
  }
}

TEST(RunEpisode, GtModeEndsAtSensing) {
  GameConfig c = reference_config(1);
  c.attacker_spawn = {0.5, 0.5, 0.95, 0.95};
  c.defender_spawn = {0.5, 0.5, 0.05, 0.05};
  Rng rng = make_rng(4);
  const EpisodeRecord rec = run_episode(c, scripted_policy(), Mode::GtAssisted, rng);
  ASSERT_EQ(rec.terminal, Terminal::Sensed);
  ASSERT_TRUE(rec.sensing_step);
  // Attacker falls 0.005 per step; sensed once within 0.3 of the defender.
  EXPECT_EQ(*rec.sensing_step, 120);
  EXPECT_EQ(rec.trace.size(), static_cast<std::size_t>(*rec.sensing_step) + 1);
  EXPECT_EQ(rec.trace.back().terminal, Terminal::Sensed);
  ASSERT_TRUE(rec.nash_at_sensing);
  EXPECT_NEAR(*rec.nash_at_sensing, 0.35 - 0.3 / (3.33 + 1.0), 1e-9);
}

TEST(RunEpisode, StandardModeNeverEndsSensed) {
  const GameConfig c = reference_config(3);
  for (int k = 0; k < 50; ++k) {
    Rng rng = make_rng(5, 0, k);
    GameConfig cc = c;
    cc.defenders[0].sensing_radius = 0.5;
    const EpisodeRecord rec = run_episode(cc, scripted_policy(), Mode::Standard, rng);
    EXPECT_NE(rec.terminal, Terminal::Sensed);
    EXPECT_NE(rec.terminal, Terminal::None);
  }
}

TEST(RunEpisode, Deterministic) {
  const GameConfig c = reference_config(3);
  Rng a = make_rng(6);
  Rng b = make_rng(6);
  const EpisodeRecord r1 = run_episode(c, scripted_policy(), Mode::Standard, a);
  const EpisodeRecord r2 = run_episode(c, scripted_policy(), Mode::Standard, b);
  ASSERT_EQ(r1.trace.size(), r2.trace.size());
  for (std::size_t i = 0; i < r1.trace.size(); ++i) {
    EXPECT_EQ(r1.trace[i].attacker, r2.trace[i].attacker);
    EXPECT_EQ(r1.trace[i].defenders, r2.trace[i].defenders);
  }
  EXPECT_EQ(r1.payoff_y, r2.payoff_y);
}

TEST(RunEpisode, PolicyFailureIsReported) {
  const GameConfig c = reference_config(1);
  Rng rng = make_rng(7);
  const DefenderPolicy broken = [](const GameState&, const GameConfig&) -> std::vector<Point2> {
    throw std::runtime_error("boom");
  };
  try {
    run_episode(c, broken, Mode::Standard, rng);
    FAIL() << "expected a policy failure";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("boom"), std::string::npos);
  }
}

TEST(RunEpisode, KinematicInvariants) {
  GameConfig c = reference_config(3);
  c.defenders[0].sensing_radius = 0.4;
  std::uniform_real_distribution<double> angle(-1.0, 1.0);
  for (int k = 0; k < 40; ++k) {
    Rng rng = make_rng(8, 0, k);
    Rng policy_rng = make_rng(8, 1, k);
    const DefenderPolicy wander = [&](const GameState& s, const GameConfig&) {
      std::vector<Point2> u;
      for (std::size_t i = 0; i < s.defenders.size(); ++i) {
        const double a = angle(policy_rng) * 3.141592653589793;
        u.push_back({std::cos(a), std::sin(a)});
      }
      return u;
    };
    const EpisodeRecord rec = run_episode(c, wander, Mode::Standard, rng);
    int pursuit_from = -1;
    for (std::size_t t = 1; t < rec.trace.size(); ++t) {
      const auto& prev = rec.trace[t - 1];
      const auto& cur = rec.trace[t];
      for (std::size_t i = 0; i < cur.defenders.size(); ++i) {
        EXPECT_LE(distance(prev.defenders[i], cur.defenders[i]), c.defenders[i].speed * c.dt + 1e-12);
      }
      EXPECT_LE(distance(prev.attacker, cur.attacker), c.attacker_speed * c.dt + 1e-12);
      if (prev.phase == Phase::Pursuit) EXPECT_EQ(cur.phase, Phase::Pursuit);
      if (cur.phase == Phase::Search) EXPECT_NEAR(cur.attacker.x, rec.trace[0].attacker.x, 1e-12);
      if (cur.phase == Phase::Pursuit && pursuit_from < 0) pursuit_from = static_cast<int>(t);
    }
    if (rec.sensing_step) EXPECT_EQ(*rec.sensing_step, pursuit_from);
  }
}

}  // namespace
}  // namespace borderdef
