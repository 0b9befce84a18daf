// borderdef: solve, simulate, train, evaluate, landscape.
//
// Exit codes: 0 ok, 1 runtime failure, 2 usage, 3 scenario/config schema,
// 4 training divergence.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "borderdef/eval.hpp"
#include "borderdef/scenario.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace borderdef;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;
constexpr int kExitDivergence = 4;

constexpr std::uint64_t kSimulateStream = 0x73696d;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> numbers(const std::string& text, std::size_t expected, const std::string& what) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(what + ": '" + item + "' is not a number");
    }
  }
  if (out.size() != expected) {
    throw UsageError(what + ": expected " + std::to_string(expected) + " comma-separated values, got '" + text + "'");
  }
  return out;
}

Point2 point_arg(const std::string& text, const std::string& what) {
  const auto v = numbers(text, 2, what);
  return {v[0], v[1]};
}

std::vector<CaptureDefender> defender_args(const std::vector<std::string>& items) {
  std::vector<CaptureDefender> out;
  for (const auto& d : items) {
    const auto v = numbers(d, 3, "--defender");
    if (!(v[2] > 1.0) || !std::isfinite(v[2])) {
      throw UsageError("--defender " + d + ": speed ratio nu must be a finite number above 1");
    }
    out.push_back({{v[0], v[1]}, v[2]});
  }
  return out;
}

// Seed precedence: --seed, then whatever the scenario pins, then entropy.
struct SeedChoice {
  std::uint64_t value = 0;
  bool from_entropy = false;
};

SeedChoice choose_seed(const std::optional<std::uint64_t>& cli, const std::optional<std::uint64_t>& scenario = {}) {
  if (cli) return {*cli, false};
  if (scenario) return {*scenario, false};
  std::random_device rd;
  const std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  return {s, true};
}

void announce_seed(const SeedChoice& s) {
  if (s.from_entropy) std::cerr << "no --seed given; using entropy seed " << s.value << "\n";
}

fs::path output_dir(const std::string& flag, const std::string& subcommand) {
  if (!flag.empty()) return flag;
  if (const char* root = std::getenv("BORDERDEF_OUTPUT_ROOT"); root && *root) return fs::path(root) / subcommand;
  return fs::path("runs") / subcommand;
}

Scenario scenario_arg(const std::string& path, const std::string& mode_override) {
  Scenario s = path.empty() ? default_scenario(1) : load_scenario(path);
  if (!mode_override.empty()) {
    try {
      s.mode = parse_mode(mode_override);
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--mode: ") + e.what());
    }
  }
  return s;
}

json point_json(const Point2& p) { return json::array({p.x, p.y}); }

// ---------------------------------------------------------------- solve

struct SolveArgs {
  std::string attacker;
  std::vector<std::string> defenders;
  bool as_json = false;
  bool check = false;
  int resolution = 2000;
};

int cmd_solve(const SolveArgs& a) {
  PursuitConfig pc;
  pc.attacker = point_arg(a.attacker, "--attacker");
  pc.capture_defenders = defender_args(a.defenders);
  if (pc.capture_defenders.empty()) throw UsageError("solve needs at least one --defender x,y,nu");

  const NashSolution sol = nash_payoff_multi(pc);
  json j;
  j["payoff"] = sol.payoff;
  j["intercept"] = point_json(sol.intercept_point);
  j["unclamped"] = sol.unclamped;
  json circles = json::array();
  for (const auto& d : pc.capture_defenders) {
    const Circle c = apollonius_circle(pc.attacker, d.position, d.speed_ratio);
    circles.push_back({{"defender", point_json(d.position)},
                       {"nu", d.speed_ratio},
                       {"center", point_json(c.center)},
                       {"radius", c.radius},
                       {"lowest_point_y", c.center.y - c.radius}});
  }
  j["circles"] = circles;
  if (a.check) {
    if (a.resolution < 100) throw UsageError("--resolution must be at least 100");
    const double oracle = nash_payoff_oracle(pc, a.resolution);
    j["oracle"] = {{"resolution", a.resolution}, {"payoff", oracle}, {"difference", sol.payoff - oracle}};
  }

  if (a.as_json) {
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  std::printf("payoff      %.10f\n", sol.payoff);
  std::printf("intercept   (%.10f, %.10f)%s\n", sol.intercept_point.x, sol.intercept_point.y,
              sol.clamped ? "  [below target line, payoff clamped to 0]" : "");
  for (std::size_t i = 0; i < circles.size(); ++i) {
    const auto& c = circles[i];
    std::printf("defender %zu  nu=%.4g  center=(%.10f, %.10f)  radius=%.10f\n", i, c["nu"].get<double>(),
                c["center"][0].get<double>(), c["center"][1].get<double>(), c["radius"].get<double>());
  }
  if (a.check) {
    std::printf("oracle      %.10f  (grid %d, difference %.3e)\n", j["oracle"]["payoff"].get<double>(), a.resolution,
                j["oracle"]["difference"].get<double>());
  }
  return 0;
}

// ------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string scenario;
  std::string checkpoint;
  std::string policy = "scripted";
  std::string mode;
  std::size_t episodes = 1;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a, const std::optional<std::uint64_t>& seed_flag) {
  const Scenario sc = scenario_arg(a.scenario, a.mode);
  const SeedChoice seed = choose_seed(seed_flag);
  announce_seed(seed);

  std::optional<TrainerState> ckpt;
  DefenderPolicy policy;
  if (a.policy == "checkpoint" || !a.checkpoint.empty()) {
    if (a.checkpoint.empty()) throw UsageError("--policy checkpoint needs --checkpoint PATH");
    if (!fs::exists(a.checkpoint)) throw std::runtime_error("checkpoint not found: " + a.checkpoint);
    ckpt = load_checkpoint(a.checkpoint);
    if (ckpt->policy.n_defenders != sc.game.n_defenders()) {
      throw ConfigError("checkpoint was trained for " + std::to_string(ckpt->policy.n_defenders) +
                        " defender(s), scenario has " + std::to_string(sc.game.n_defenders()));
    }
    policy = learned_policy(ckpt->policy);
  } else if (a.policy == "scripted") {
    policy = scripted_policy(sc.search);
  } else {
    throw UsageError("--policy must be scripted or checkpoint");
  }

  const fs::path dir = output_dir(a.out, "simulate");
  fs::create_directories(dir);
  write_text(dir / "scenario.json", scenario_json(sc));

  json episodes = json::array();
  for (std::size_t i = 0; i < a.episodes; ++i) {
    Rng rng = make_rng(seed.value, kSimulateStream, i);
    const EpisodeRecord rec = run_episode(sc.game, policy, sc.mode, rng);
    char name[64];
    std::snprintf(name, sizeof name, "trace_%05zu.jsonl", i);
    write_text(dir / name, trace_jsonl(rec));
    episodes.push_back({{"episode", i},
                        {"trace", name},
                        {"terminal", to_string(rec.terminal)},
                        {"reward", episode_reward(rec, sc.mode)},
                        {"final_attacker_y", rec.trace.back().attacker.y},
                        {"length", rec.length},
                        {"sensing_step", rec.sensing_step ? json(*rec.sensing_step) : json(nullptr)},
                        {"nash_at_sensing", rec.nash_at_sensing ? json(*rec.nash_at_sensing) : json(nullptr)}});
  }
  json summary;
  summary["seed"] = seed.value;
  summary["seed_from_entropy"] = seed.from_entropy;
  summary["mode"] = to_string(sc.mode);
  summary["policy"] = ckpt ? "checkpoint" : "scripted";
  if (ckpt) summary["checkpoint"] = a.checkpoint;
  summary["saved_steps_estimate"] = saved_steps_estimate(sc.game);
  summary["episodes"] = episodes;
  write_text(dir / "summary.json", summary.dump(2) + "\n");

  std::size_t sensed = 0;
  double total = 0.0;
  for (const auto& e : episodes) {
    sensed += !e["sensing_step"].is_null();
    total += e["reward"].get<double>();
  }
  std::printf("simulated %zu episode(s) in %s mode, seed %llu\n", a.episodes, to_string(sc.mode).c_str(),
              static_cast<unsigned long long>(seed.value));
  if (a.episodes > 0) {
    std::printf("sensed %zu, mean reward %.6f\n", sensed, total / static_cast<double>(a.episodes));
  }
  std::printf("saved_steps_estimate %.4f\n", saved_steps_estimate(sc.game));
  std::printf("outputs in %s\n", dir.string().c_str());
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string scenario;
  std::string seeds;
  std::string mode;
  std::string resume;
  std::string out;
  std::int64_t frames = -1;
  bool quiet = false;
};

std::vector<std::uint64_t> seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      if (!item.empty() && item[0] == '-') throw std::invalid_argument(item);
      out.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("--seeds: '" + item + "' is not a non-negative integer");
    }
  }
  if (out.empty()) throw UsageError("--seeds: empty list");
  return out;
}

int cmd_train(const TrainArgs& a, const std::optional<std::uint64_t>& seed_flag) {
  Scenario sc = scenario_arg(a.scenario, a.mode);
  if (a.frames >= 0) sc.train.frames = static_cast<std::uint64_t>(a.frames);
  sc.train.validate();

  std::vector<std::uint64_t> seeds;
  bool entropy = false;
  if (!a.seeds.empty()) {
    seeds = seed_list(a.seeds);
  } else {
    const SeedChoice s = choose_seed(seed_flag);
    announce_seed(s);
    seeds = {s.value};
    entropy = s.from_entropy;
  }
  if (!a.resume.empty() && seeds.size() != 1) throw UsageError("--resume continues a single run; give one seed");

  const fs::path root = output_dir(a.out, "train");
  for (const std::uint64_t seed : seeds) {
    Scenario run = sc;
    run.train.seed = seed;
    const fs::path dir = root / ("seed_" + std::to_string(seed));
    fs::create_directories(dir);
    write_text(dir / "scenario.json", scenario_json(run));

    BatchEnv env(run.game, run.mode, run.train.n_envs, seed, run.train.gamma);
    TrainOptions opts;
    opts.output_dir = dir;
    if (!a.resume.empty()) {
      if (!fs::exists(a.resume)) throw std::runtime_error("checkpoint not found: " + a.resume);
      opts.resume = load_checkpoint(a.resume);
      std::printf("resuming from %s at frame %llu\n", a.resume.c_str(),
                  static_cast<unsigned long long>(opts.resume->frames));
    }
    if (!a.quiet) {
      opts.on_iteration = [](const TrainerState&, const MetricsRow& r) {
        if (r.iteration % 10 == 0) {
          std::printf("  iter %5llu  frames %9llu  reward %.4f  sensing %.3f  length %.1f\n",
                      static_cast<unsigned long long>(r.iteration), static_cast<unsigned long long>(r.frames),
                      r.mean_reward, r.sensing_rate, r.episode_length);
          std::fflush(stdout);
        }
      };
    }
    std::printf("training seed %llu (%s mode, %llu frames) -> %s\n", static_cast<unsigned long long>(seed),
                to_string(run.mode).c_str(), static_cast<unsigned long long>(run.train.frames), dir.string().c_str());
    const TrainResult res = train(env, run.train, opts);
    json info;
    info["seed"] = seed;
    info["seed_from_entropy"] = entropy;
    info["frames"] = res.state.frames;
    info["iterations"] = res.state.iteration;
    info["episodes"] = res.state.episodes;
    info["resumed_from"] = a.resume.empty() ? json(nullptr) : json(a.resume);
    json cks = json::array();
    for (const auto& c : res.checkpoints) cks.push_back(c.filename().string());
    info["checkpoints"] = cks;
    info["final_checkpoint"] = res.checkpoints.empty() ? json(nullptr) : json(res.checkpoints.back().string());
    write_text(dir / "run.json", info.dump(2) + "\n");
    if (!res.metrics.empty()) {
      std::printf("  done: %llu frames, last-iteration reward %.4f\n", static_cast<unsigned long long>(res.state.frames),
                  res.metrics.back().mean_reward);
    }
  }
  return 0;
}

// ------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string checkpoint;
  std::string scenario;
  std::string mode;
  std::string compare;
  std::string out;
  std::int64_t episodes = -1;
  bool scripted = false;
  bool stochastic = false;
};

std::string read_file(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw std::runtime_error("cannot read " + p.string());
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

int cmd_evaluate(const EvaluateArgs& a, const std::optional<std::uint64_t>& seed_flag) {
  const Scenario sc = scenario_arg(a.scenario, a.mode);
  const std::size_t n = a.episodes >= 0 ? static_cast<std::size_t>(a.episodes) : sc.eval.episodes;
  const SeedChoice seed = choose_seed(seed_flag, sc.eval.seed);
  announce_seed(seed);

  EvalReport report;
  if (a.scripted) {
    report = evaluate_policy(scripted_policy(sc.search), sc.game, sc.mode, n, seed.value);
  } else {
    if (a.checkpoint.empty()) throw UsageError("evaluate needs --checkpoint PATH or --scripted");
    if (!fs::exists(a.checkpoint)) throw std::runtime_error("checkpoint not found: " + a.checkpoint);
    const TrainerState st = load_checkpoint(a.checkpoint);
    report = evaluate(st.policy, sc.game, sc.mode, n, seed.value, a.stochastic || sc.eval.stochastic);
  }

  const fs::path dir = output_dir(a.out, "evaluate");
  fs::create_directories(dir);
  Scenario echo = sc;
  echo.eval.episodes = n;
  echo.eval.seed = seed.value;
  write_text(dir / "scenario.json", scenario_json(echo));
  write_text(dir / "report.json", report_json(report));
  write_text(dir / "episodes.csv", report_csv(report));

  const auto show = [](const char* name, const std::optional<double>& v) {
    if (v) {
      std::printf("%-14s %.6f\n", name, *v);
    } else {
      std::printf("%-14s n/a\n", name);
    }
  };
  std::printf("episodes       %zu  (%s mode, seed %llu)\n", report.episodes, to_string(report.mode).c_str(),
              static_cast<unsigned long long>(seed.value));
  show("sensing_rate", report.sensing_rate);
  show("mean_reward", report.mean_reward);
  show("median_reward", report.median_reward);
  show("std_reward", report.std_reward);
  show("mean_nash", report.mean_nash);
  show("median_nash", report.median_nash);
  show("mean_length", report.mean_length);

  if (!a.compare.empty()) {
    const EvalReport other = report_from_json(read_file(a.compare));
    const Comparison c = compare(report, other);
    write_text(dir / "comparison.json", comparison_json(c));
    std::printf("\ncomparison against %s\n", a.compare.c_str());
    if (c.config_mismatch) std::printf("WARNING: reports come from different game configurations\n");
    if (c.episode_mismatch) std::printf("WARNING: reports cover different episode counts\n");
    for (const auto& m : c.metrics) {
      if (m.delta) {
        std::printf("%-14s delta %+.6f%s\n", m.name.c_str(), *m.delta,
                    m.ratio ? ("  ratio " + std::to_string(*m.ratio)).c_str() : "");
      } else {
        std::printf("%-14s n/a\n", m.name.c_str());
      }
    }
  }
  std::printf("outputs in %s\n", dir.string().c_str());
  return 0;
}

// ------------------------------------------------------------ landscape

struct LandscapeArgs {
  std::string attacker;
  std::vector<std::string> defenders;
  double nu = 3.33;
  std::string x_range = "0,1";
  std::string y_range = "0,1";
  std::string resolution = "101,101";
  std::string out;
};

int cmd_landscape(const LandscapeArgs& a, const std::optional<std::uint64_t>& seed_flag) {
  PursuitConfig fixed;
  fixed.attacker = point_arg(a.attacker, "--attacker");
  fixed.capture_defenders = defender_args(a.defenders);
  if (!(a.nu > 1.0)) throw UsageError("--nu must be above 1");
  const auto xr = numbers(a.x_range, 2, "--x-range");
  const auto yr = numbers(a.y_range, 2, "--y-range");
  const auto res = numbers(a.resolution, 2, "--resolution");
  if (res[0] < 1 || res[1] < 1 || res[0] != std::floor(res[0]) || res[1] != std::floor(res[1])) {
    throw UsageError("--resolution needs two positive integers");
  }
  if (xr[1] < xr[0] || yr[1] < yr[0]) throw UsageError("ranges must be given as min,max");
  const GridSpec grid{xr[0], xr[1], yr[0], yr[1], static_cast<int>(res[0]), static_cast<int>(res[1])};
  // Nothing here is random; the seed is still recorded for provenance.
  const SeedChoice seed = choose_seed(seed_flag);

  fs::path out = a.out.empty() ? output_dir("", "landscape") / "landscape.csv" : fs::path(a.out);
  const Landscape l = landscape_report(fixed, a.nu, grid, out);
  json meta;
  meta["attacker"] = point_json(fixed.attacker);
  json fd = json::array();
  for (const auto& d : fixed.capture_defenders) fd.push_back({{"position", point_json(d.position)}, {"nu", d.speed_ratio}});
  meta["fixed_defenders"] = fd;
  meta["swept_nu"] = a.nu;
  meta["grid"] = {{"x", {grid.x_min, grid.x_max}}, {"y", {grid.y_min, grid.y_max}}, {"nx", grid.nx}, {"ny", grid.ny}};
  meta["failures"] = l.failures;
  meta["seed"] = seed.value;
  fs::path meta_path = out;
  meta_path.replace_extension(".json");
  write_text(meta_path, meta.dump(2) + "\n");

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : l.values) {
    if (std::isnan(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::printf("landscape %dx%d written to %s (payoff range %.6f .. %.6f, %d failed cells)\n", grid.nx, grid.ny,
              out.string().c_str(), lo, hi, static_cast<int>(l.failures));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Target-defense game toolkit: Nash payoffs, simulation, MAPPO training and evaluation"};
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed;
  app.add_option("--seed", seed, "Seed for every random stream (default: fresh entropy, reported)");

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "Nash payoff and intercept point for one configuration");
  s->add_option("--attacker", solve.attacker, "Attacker position x,y")->required();
  s->add_option("--defender", solve.defenders, "Capture-capable defender x,y,nu (repeatable)")->required();
  s->add_flag("--json", solve.as_json, "Machine-readable output");
  s->add_flag("--check", solve.check, "Also run the grid oracle and print the difference");
  s->add_option("--resolution", solve.resolution, "Grid oracle resolution")->capture_default_str();

  SimulateArgs sim;
  auto* m = app.add_subcommand("simulate", "Run episodes and write per-step traces");
  m->add_option("--scenario", sim.scenario, "Scenario JSON file");
  m->add_option("--policy", sim.policy, "scripted or checkpoint")->capture_default_str();
  m->add_option("--checkpoint", sim.checkpoint, "Checkpoint for --policy checkpoint");
  m->add_option("--mode", sim.mode, "Override reward mode: gt or standard");
  m->add_option("--episodes", sim.episodes, "Number of episodes")->capture_default_str();
  m->add_option("--out", sim.out, "Output directory");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train MAPPO defenders, one run per seed");
  t->add_option("--scenario", tr.scenario, "Scenario JSON file");
  t->add_option("--seeds", tr.seeds, "Comma-separated seeds (default: --seed)");
  t->add_option("--frames", tr.frames, "Override the frame budget");
  t->add_option("--mode", tr.mode, "Override reward mode: gt or standard");
  t->add_option("--resume", tr.resume, "Continue from a checkpoint");
  t->add_option("--out", tr.out, "Run directory");
  t->add_flag("--quiet", tr.quiet, "No per-iteration progress");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Evaluate a checkpoint (or the scripted policy)");
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint file");
  e->add_flag("--scripted", ev.scripted, "Evaluate the scripted policy instead");
  e->add_option("--scenario", ev.scenario, "Scenario JSON file");
  e->add_option("--mode", ev.mode, "Override reward mode: gt or standard");
  e->add_option("--episodes", ev.episodes, "Override the episode count");
  e->add_flag("--stochastic", ev.stochastic, "Sample actions instead of using the mean");
  e->add_option("--compare", ev.compare, "Another report.json to compare against");
  e->add_option("--out", ev.out, "Output directory");

  LandscapeArgs ls;
  auto* l = app.add_subcommand("landscape", "Payoff landscape over one swept defender's position");
  l->add_option("--attacker", ls.attacker, "Attacker position x,y")->required();
  l->add_option("--defender", ls.defenders, "Fixed capture-capable defender x,y,nu (repeatable)");
  l->add_option("--nu", ls.nu, "Speed ratio of the swept defender")->capture_default_str();
  l->add_option("--x-range", ls.x_range, "x_min,x_max")->capture_default_str();
  l->add_option("--y-range", ls.y_range, "y_min,y_max")->capture_default_str();
  l->add_option("--resolution", ls.resolution, "nx,ny")->capture_default_str();
  l->add_option("--out", ls.out, "Output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (s->parsed()) return cmd_solve(solve);
    if (m->parsed()) return cmd_simulate(sim, seed);
    if (t->parsed()) return cmd_train(tr, seed);
    if (e->parsed()) return cmd_evaluate(ev, seed);
    if (l->parsed()) return cmd_landscape(ls, seed);
  } catch (const UsageError& err) {
    std::cerr << "usage error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& err) {
    std::cerr << "configuration error: " << err.what() << "\n";
    return kExitConfig;
  } catch (const DivergenceError& err) {
    std::cerr << "training diverged: " << err.what() << "\n";
    return kExitDivergence;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
