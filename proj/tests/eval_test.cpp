#include "borderdef/eval.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace borderdef {
namespace {

DefenderPolicy motionless() {
  return [](const GameState& s, const GameConfig&) { return std::vector<Point2>(s.defenders.size(), {0.0, 0.0}); };
}

TEST(Evaluate, MotionlessDefendersMatchHandCount) {
  GameConfig c = reference_config(2);
  c.defender_spawn = {0.0, 1.0, 0.0, 0.02};
  for (auto& d : c.defenders) d.sensing_radius = 0.08;
  int expected = 0;
  int observed = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    // The attacker falls straight down at its spawn x, so it is sensed
    // exactly when that x lies within a sensing radius of a defender.
    Rng rng = make_rng(seed, 0x6576616c, 0);
    const GameState s = spawn(c, rng);
    bool sensed = false;
    for (const auto& d : s.defenders) sensed = sensed || std::abs(d.x - s.attacker.x) < 0.08;
    expected += sensed;
    const EvalReport r = evaluate_policy(motionless(), c, Mode::Standard, 1, seed);
    observed += r.records[0].sensing_step.has_value();
  }
  EXPECT_EQ(observed, expected);
  EXPECT_GT(expected, 0);
  EXPECT_LT(expected, 10);
}

TEST(Evaluate, EmptyReport) {
  const EvalReport r = evaluate_policy(scripted_policy(), reference_config(1), Mode::GtAssisted, 0, 1);
  EXPECT_EQ(r.episodes, 0u);
  EXPECT_FALSE(r.sensing_rate);
  EXPECT_FALSE(r.mean_reward);
  EXPECT_FALSE(r.median_nash);
  const std::string json = report_json(r);
  EXPECT_NE(json.find("\"sensing_rate\": null"), std::string::npos);
}

TEST(Evaluate, DeterministicForCheckpointAndSeed) {
  Rng rng = make_rng(2);
  const PolicyParams p = make_policy(3, padded_width(3), 16, true, -0.5, rng);
  const GameConfig c = reference_config(3);
  const std::string a = report_json(evaluate(p, c, Mode::Standard, 25, 7));
  const std::string b = report_json(evaluate(p, c, Mode::Standard, 25, 7));
  EXPECT_EQ(a, b);
  const std::string s1 = report_json(evaluate(p, c, Mode::Standard, 10, 7, true));
  const std::string s2 = report_json(evaluate(p, c, Mode::Standard, 10, 7, true));
  EXPECT_EQ(s1, s2);
}

TEST(Evaluate, IncompatibleCheckpointRejected) {
  Rng rng = make_rng(3);
  const PolicyParams p = make_policy(1, padded_width(1), 8, true, -0.5, rng);
  EXPECT_THROW(evaluate(p, reference_config(3), Mode::GtAssisted, 1, 0), ConfigError);
}

TEST(Evaluate, StandardModeStillRecordsNashAtSensing) {
  const EvalReport r = evaluate_policy(scripted_policy(), reference_config(3), Mode::Standard, 100, 4);
  ASSERT_GT(r.nash_payoffs.size(), 0u);
  for (const auto& e : r.records) EXPECT_EQ(e.sensing_step.has_value(), e.nash_at_sensing.has_value());
}

TEST(Aggregate, MatchesRecomputation) {
  const EvalReport r = evaluate_policy(scripted_policy(), reference_config(3), Mode::Standard, 200, 5);
  double sum = 0.0, len = 0.0;
  int sensed = 0;
  for (const auto& e : r.records) {
    sum += e.reward;
    len += e.length;
    sensed += e.sensing_step.has_value();
  }
  EXPECT_NEAR(*r.mean_reward, sum / 200.0, 1e-12);
  EXPECT_NEAR(*r.mean_length, len / 200.0, 1e-12);
  EXPECT_EQ(*r.sensing_rate, sensed / 200.0);
  std::vector<double> rewards;
  for (const auto& e : r.records) rewards.push_back(e.reward);
  std::sort(rewards.begin(), rewards.end());
  EXPECT_EQ(*r.median_reward, 0.5 * (rewards[99] + rewards[100]));
}

TEST(Aggregate, GtMeanEqualsSensingRateTimesMeanNash) {
  const EvalReport r = evaluate_policy(scripted_policy(), reference_config(3), Mode::GtAssisted, 300, 6);
  ASSERT_TRUE(r.mean_nash);
  EXPECT_NEAR(*r.mean_reward, *r.sensing_rate * *r.mean_nash, 1e-12);
  for (const auto& e : r.records) {
    EXPECT_TRUE(e.terminal == Terminal::Sensed || e.terminal == Terminal::Breached || e.terminal == Terminal::Timeout);
  }
}

TEST(Aggregate, OrderIndependent) {
  const EvalReport r = evaluate_policy(scripted_policy(), reference_config(1), Mode::GtAssisted, 50, 7);
  std::vector<EvalEpisode> shuffled = r.records;
  Rng rng = make_rng(8);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const EvalReport again = aggregate(shuffled, r.mode, r.config_id);
  EXPECT_EQ(report_json(again), report_json(r));
}

TEST(Reports, JsonRoundTrip) {
  const EvalReport r = evaluate_policy(scripted_policy(), reference_config(1), Mode::Standard, 20, 9);
  const EvalReport back = report_from_json(report_json(r));
  EXPECT_EQ(report_json(back), report_json(r));
}

TEST(Reports, CsvCumulativeMean) {
  const EvalReport r = evaluate_policy(scripted_policy(), reference_config(1), Mode::Standard, 5, 10);
  std::istringstream in(report_csv(r));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.substr(0, 8), "episode,");
  double sum = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    ASSERT_TRUE(std::getline(in, line));
    sum += r.records[i].reward;
    const double cum = std::stod(line.substr(line.rfind(',') + 1));
    EXPECT_NEAR(cum, sum / static_cast<double>(i + 1), 1e-15);
  }
}

TEST(Compare, IdenticalReportsGiveZeroDeltas) {
  const EvalReport r = evaluate_policy(scripted_policy(), reference_config(1), Mode::GtAssisted, 30, 11);
  const Comparison c = compare(r, r);
  EXPECT_FALSE(c.config_mismatch);
  EXPECT_FALSE(c.episode_mismatch);
  for (const auto& m : c.metrics) {
    ASSERT_TRUE(m.delta) << m.name;
    EXPECT_EQ(*m.delta, 0.0) << m.name;
  }
}

TEST(Compare, MismatchesFlagged) {
  const EvalReport a = evaluate_policy(scripted_policy(), reference_config(1), Mode::GtAssisted, 10, 12);
  const EvalReport b = evaluate_policy(scripted_policy(), reference_config(3), Mode::GtAssisted, 12, 12);
  const Comparison c = compare(a, b);
  EXPECT_TRUE(c.config_mismatch);
  EXPECT_TRUE(c.episode_mismatch);
  EXPECT_NE(comparison_json(c).find("\"config_mismatch\": true"), std::string::npos);
}

TEST(Landscape, CsvLayoutAndMirrorSymmetry) {
  PursuitConfig fixed;
  fixed.attacker = {0.5, 0.8};
  fixed.capture_defenders = {{{0.2, 0.1}, 3.33}, {{0.8, 0.1}, 3.33}};
  const GridSpec grid{0.0, 1.0, 0.0, 0.6, 21, 7};
  const Landscape l = payoff_landscape(fixed, 3.33, grid);
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) EXPECT_NEAR(l.at(i, j), l.at(grid.nx - 1 - i, j), 1e-9);
  }
  std::istringstream in(landscape_csv(l));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.substr(0, 2), "x,");
  EXPECT_EQ(std::count(line.begin(), line.end(), ','), 21);
  std::getline(in, line);
  EXPECT_EQ(line.substr(0, 2), "y,");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 7);
}

TEST(Landscape, SingleCellReport) {
  PursuitConfig fixed;
  fixed.attacker = {0.5, 0.95};
  const GridSpec grid{0.5, 0.5, 0.05, 0.05, 1, 1};
  const auto path = std::filesystem::temp_directory_path() / "borderdef_eval_landscape.csv";
  const Landscape l = landscape_report(fixed, 3.33, grid, path);
  ASSERT_EQ(l.values.size(), 1u);
  EXPECT_NEAR(l.values[0], 0.7421, 1e-4);
  EXPECT_TRUE(std::filesystem::exists(path));
}

}  // namespace
}  // namespace borderdef
