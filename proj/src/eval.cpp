#include "borderdef/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace borderdef {

namespace {

using nlohmann::json;

constexpr std::uint64_t kEvalStream = 0x6576616cULL;

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Terminal terminal_from(const std::string& s) {
  for (Terminal t : {Terminal::None, Terminal::Sensed, Terminal::Captured, Terminal::Breached, Terminal::Timeout}) {
    if (to_string(t) == s) return t;
  }
  throw std::invalid_argument("unknown terminal reason '" + s + "'");
}

}  // namespace

DefenderPolicy learned_policy(const PolicyParams& params, Rng* rng) {
  return [&params, rng](const GameState& s, const GameConfig& c) {
    const std::size_t nd = c.n_defenders();
    const Observation obs = observe(s, c, 0);
    std::vector<double> padded(padded_width(nd));
    write_padded(obs, nd, padded);
    std::vector<Point2> controls(nd);
    for (std::size_t k = 0; k < nd; ++k) {
      const double a = rng ? sample_action(params, k, padded, *rng).action : action_mean(params, k, padded);
      controls[k] = decode_action(a);
    }
    return controls;
  };
}

EvalReport aggregate(std::vector<EvalEpisode> records, Mode mode, std::string config_id) {
  EvalReport r;
  r.mode = mode;
  r.config_id = std::move(config_id);
  r.episodes = records.size();
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
  r.records = std::move(records);
  if (r.episodes == 0) return r;

  const double n = static_cast<double>(r.episodes);
  std::vector<double> rewards;
  double sum = 0.0;
  double len = 0.0;
  std::size_t sensed = 0;
  for (const auto& e : r.records) {
    rewards.push_back(e.reward);
    sum += e.reward;
    len += e.length;
    if (e.sensing_step) {
      ++sensed;
      r.nash_payoffs.push_back(e.nash_at_sensing.value_or(0.0));
    }
  }
  const double mean = sum / n;
  double var = 0.0;
  for (double x : rewards) var += (x - mean) * (x - mean);
  r.mean_reward = mean;
  r.std_reward = std::sqrt(var / n);
  r.median_reward = median_of(rewards);
  r.mean_length = len / n;
  r.sensing_rate = static_cast<double>(sensed) / n;
  if (!r.nash_payoffs.empty()) {
    double s = 0.0;
    for (double x : r.nash_payoffs) s += x;
    r.mean_nash = s / static_cast<double>(r.nash_payoffs.size());
    r.median_nash = median_of(r.nash_payoffs);
  }
  return r;
}

std::string config_fingerprint(const GameConfig& c) {
  json j;
  j["attacker_speed"] = c.attacker_speed;
  j["attacker_spawn"] = {c.attacker_spawn.x_min, c.attacker_spawn.x_max, c.attacker_spawn.y_min, c.attacker_spawn.y_max};
  j["defender_spawn"] = {c.defender_spawn.x_min, c.defender_spawn.x_max, c.defender_spawn.y_min, c.defender_spawn.y_max};
  j["dt"] = c.dt;
  j["max_steps"] = c.max_steps;
  json d = json::array();
  for (const auto& s : c.defenders) d.push_back({s.speed, s.sensing_radius, s.capture_radius, s.can_capture});
  j["defenders"] = d;
  return j.dump();
}

EvalReport evaluate_policy(const DefenderPolicy& policy, const GameConfig& config, Mode mode, std::size_t n_episodes,
                           std::uint64_t seed) {
  config.validate();
  std::vector<EvalEpisode> records;
  records.reserve(n_episodes);
  for (std::size_t i = 0; i < n_episodes; ++i) {
    Rng rng = make_rng(seed, kEvalStream, i);
    const EpisodeRecord rec = run_episode(config, policy, mode, rng);
    EvalEpisode e;
    e.index = i;
    e.terminal = rec.terminal;
    e.reward = episode_reward(rec, mode);
    e.length = rec.length;
    e.sensing_step = rec.sensing_step;
    e.nash_at_sensing = rec.nash_at_sensing;
    e.final_attacker_y = rec.trace.back().attacker.y;
    records.push_back(e);
  }
  return aggregate(std::move(records), mode, config_fingerprint(config));
}

EvalReport evaluate(const PolicyParams& params, const GameConfig& config, Mode mode, std::size_t n_episodes,
                    std::uint64_t seed, bool stochastic) {
  if (params.n_defenders != config.n_defenders() || params.obs_width != padded_width(config.n_defenders())) {
    throw ConfigError("checkpoint is incompatible with the scenario: it was trained for " +
                      std::to_string(params.n_defenders) + " defender(s), scenario has " +
                      std::to_string(config.n_defenders()));
  }
  if (!stochastic) return evaluate_policy(learned_policy(params), config, mode, n_episodes, seed);
  Rng rng = make_rng(seed, kEvalStream + 1);
  return evaluate_policy(learned_policy(params, &rng), config, mode, n_episodes, seed);
}

Comparison compare(const EvalReport& a, const EvalReport& b) {
  Comparison c;
  c.config_mismatch = a.config_id != b.config_id;
  c.episode_mismatch = a.episodes != b.episodes;
  const auto add = [&](const char* name, const std::optional<double>& x, const std::optional<double>& y) {
    MetricDelta m{name, x, y, std::nullopt, std::nullopt};
    if (x && y) {
      m.delta = *x - *y;
      if (*y != 0.0) m.ratio = *x / *y;
    }
    c.metrics.push_back(m);
  };
  add("sensing_rate", a.sensing_rate, b.sensing_rate);
  add("mean_reward", a.mean_reward, b.mean_reward);
  add("median_reward", a.median_reward, b.median_reward);
  add("mean_nash", a.mean_nash, b.mean_nash);
  add("median_nash", a.median_nash, b.median_nash);
  add("mean_length", a.mean_length, b.mean_length);
  return c;
}

std::string report_json(const EvalReport& r) {
  json j;
  j["mode"] = to_string(r.mode);
  j["config"] = r.config_id;
  j["episodes"] = r.episodes;
  j["sensing_rate"] = opt(r.sensing_rate);
  j["mean_reward"] = opt(r.mean_reward);
  j["median_reward"] = opt(r.median_reward);
  j["std_reward"] = opt(r.std_reward);
  j["mean_length"] = opt(r.mean_length);
  j["mean_nash"] = opt(r.mean_nash);
  j["median_nash"] = opt(r.median_nash);
  j["nash_payoffs"] = r.nash_payoffs;
  json recs = json::array();
  for (const auto& e : r.records) {
    recs.push_back({{"index", e.index},
                    {"terminal", to_string(e.terminal)},
                    {"reward", e.reward},
                    {"length", e.length},
                    {"sensing_step", e.sensing_step ? json(*e.sensing_step) : json(nullptr)},
                    {"nash_at_sensing", opt(e.nash_at_sensing)},
                    {"final_attacker_y", e.final_attacker_y}});
  }
  j["records"] = recs;
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  const json j = json::parse(text);
  std::vector<EvalEpisode> records;
  for (const auto& r : j.at("records")) {
    EvalEpisode e;
    e.index = r.at("index");
    e.terminal = terminal_from(r.at("terminal"));
    e.reward = r.at("reward");
    e.length = r.at("length");
    if (!r.at("sensing_step").is_null()) e.sensing_step = r.at("sensing_step").get<int>();
    e.nash_at_sensing = opt_from(r, "nash_at_sensing");
    e.final_attacker_y = r.at("final_attacker_y");
    records.push_back(e);
  }
  return aggregate(std::move(records), parse_mode(j.at("mode")), j.value("config", ""));
}

std::string report_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "episode,terminal,reward,length,sensed,sensing_step,nash_at_sensing,final_attacker_y,cumulative_mean_reward\n";
  double sum = 0.0;
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    const auto& e = r.records[i];
    sum += e.reward;
    out << e.index << ',' << to_string(e.terminal) << ',' << fmt(e.reward) << ',' << e.length << ','
        << (e.sensing_step ? 1 : 0) << ',' << (e.sensing_step ? std::to_string(*e.sensing_step) : "") << ','
        << (e.nash_at_sensing ? fmt(*e.nash_at_sensing) : "") << ',' << fmt(e.final_attacker_y) << ','
        << fmt(sum / static_cast<double>(i + 1)) << '\n';
  }
  return out.str();
}

std::string comparison_json(const Comparison& c) {
  json j;
  j["config_mismatch"] = c.config_mismatch;
  j["episode_mismatch"] = c.episode_mismatch;
  json m = json::object();
  for (const auto& d : c.metrics) {
    m[d.name] = {{"a", opt(d.a)}, {"b", opt(d.b)}, {"delta", opt(d.delta)}, {"ratio", opt(d.ratio)}};
  }
  j["metrics"] = m;
  return j.dump(2) + "\n";
}

std::string landscape_csv(const Landscape& l) {
  std::ostringstream out;
  out << "x";
  for (int i = 0; i < l.grid.nx; ++i) out << ',' << fmt(l.grid.x_at(i));
  out << "\ny";
  for (int j = 0; j < l.grid.ny; ++j) out << ',' << fmt(l.grid.y_at(j));
  out << '\n';
  for (int j = 0; j < l.grid.ny; ++j) {
    for (int i = 0; i < l.grid.nx; ++i) out << (i ? "," : "") << fmt(l.at(i, j));
    out << '\n';
  }
  return out.str();
}

Landscape landscape_report(const PursuitConfig& fixed, double varying_defender_nu, const GridSpec& grid,
                           const std::filesystem::path& out) {
  Landscape l = payoff_landscape(fixed, varying_defender_nu, grid);
  write_text(out, landscape_csv(l));
  return l;
}

std::string trace_jsonl(const EpisodeRecord& record) {
  std::string out;
  const auto xy = [](const Point2& p) { return json::array({p.x, p.y}); };
  for (const auto& t : record.trace) {
    json d = json::array();
    json u = json::array();
    for (const auto& p : t.defenders) d.push_back(xy(p));
    for (const auto& p : t.defender_controls) u.push_back(xy(p));
    const json line = {{"step", t.step},       {"attacker", xy(t.attacker)},
                       {"defenders", d},       {"attacker_control", xy(t.attacker_control)},
                       {"defender_controls", u}, {"phase", to_string(t.phase)},
                       {"terminal", to_string(t.terminal)}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::trunc | std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

}  // namespace borderdef
