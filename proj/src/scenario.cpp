#include "borderdef/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace borderdef {

namespace {

using nlohmann::json;

void only_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
  }
}

template <class T>
void read(const json& j, const std::string& where, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

// Numbers only; nlohmann happily converts a bool to double otherwise.
void read_number(const json& j, const std::string& where, const char* key, double& out) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_number()) throw ConfigError(where + "." + key + ": expected a number");
  out = j.at(key).get<double>();
}

template <class T>
void read_count(const json& j, const std::string& where, const char* key, T& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError(where + "." + key + ": expected a non-negative integer");
  }
  out = static_cast<T>(v.get<unsigned long long>());
}

Rect read_rect(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) throw ConfigError(where + ": expected [x_min, x_max, y_min, y_max]");
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError(where + ": expected numbers");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

json rect_json(const Rect& r) { return json::array({r.x_min, r.x_max, r.y_min, r.y_max}); }

}  // namespace

Scenario default_scenario(std::size_t n_defenders) {
  Scenario s;
  s.game = reference_config(n_defenders);
  return s;
}

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
  }
  only_keys(j, "scenario", {"game", "defenders", "reward", "train", "eval", "scripted"});

  // Team size sets the reference sensing radius; explicit defenders win.
  std::size_t team = 1;
  const json game = j.value("game", json::object());
  only_keys(game, "game", {"team_size", "attacker_speed", "dt", "max_steps", "attacker_spawn", "defender_spawn"});
  if (game.contains("team_size")) {
    read_count(game, "game", "team_size", team);
    if (team == 0) throw ConfigError("game.team_size: must be at least 1");
  } else if (j.contains("defenders") && j.at("defenders").is_array() && !j.at("defenders").empty()) {
    team = j.at("defenders").size();
  }
  Scenario s = default_scenario(team);
  GameConfig& g = s.game;
  read_number(game, "game", "attacker_speed", g.attacker_speed);
  read_number(game, "game", "dt", g.dt);
  if (game.contains("max_steps")) read_count(game, "game", "max_steps", g.max_steps);
  if (game.contains("attacker_spawn")) g.attacker_spawn = read_rect(game.at("attacker_spawn"), "game.attacker_spawn");
  if (game.contains("defender_spawn")) g.defender_spawn = read_rect(game.at("defender_spawn"), "game.defender_spawn");

  if (j.contains("defenders")) {
    const json& ds = j.at("defenders");
    if (!ds.is_array() || ds.empty()) throw ConfigError("defenders: expected a non-empty list");
    if (game.contains("team_size") && ds.size() != team) {
      throw ConfigError("defenders: list length disagrees with game.team_size");
    }
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const std::string where = "defenders[" + std::to_string(i) + "]";
      only_keys(ds[i], where, {"speed", "sensing_radius", "capture_radius", "can_capture"});
      DefenderSpec& d = g.defenders[i];
      read_number(ds[i], where, "speed", d.speed);
      read_number(ds[i], where, "sensing_radius", d.sensing_radius);
      read_number(ds[i], where, "capture_radius", d.capture_radius);
      if (ds[i].contains("can_capture") && !ds[i].at("can_capture").is_boolean()) {
        throw ConfigError(where + ".can_capture: expected true or false");
      }
      read(ds[i], where, "can_capture", d.can_capture);
    }
  }

  const json reward = j.value("reward", json::object());
  only_keys(reward, "reward", {"mode", "gamma"});
  if (reward.contains("mode")) {
    std::string m;
    read(reward, "reward", "mode", m);
    try {
      s.mode = parse_mode(m);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("reward.mode: ") + e.what());
    }
  }
  read_number(reward, "reward", "gamma", s.train.gamma);

  const json train = j.value("train", json::object());
  only_keys(train, "train",
            {"lambda", "clip", "actor_lr", "critic_lr", "epochs", "minibatch", "rollout_frames", "n_envs", "frames",
             "entropy_coef", "entropy_decay", "max_grad_norm", "hidden", "shared_actor", "init_log_std",
             "checkpoint_interval", "seed"});
  TrainConfig& t = s.train;
  read_number(train, "train", "lambda", t.lambda);
  read_number(train, "train", "clip", t.clip);
  read_number(train, "train", "actor_lr", t.actor_lr);
  read_number(train, "train", "critic_lr", t.critic_lr);
  read_count(train, "train", "epochs", t.epochs);
  read_count(train, "train", "minibatch", t.minibatch);
  read_count(train, "train", "rollout_frames", t.rollout_frames);
  read_count(train, "train", "n_envs", t.n_envs);
  read_count(train, "train", "frames", t.frames);
  read_number(train, "train", "entropy_coef", t.entropy_coef);
  read(train, "train", "entropy_decay", t.entropy_decay);
  read_number(train, "train", "max_grad_norm", t.max_grad_norm);
  read_count(train, "train", "hidden", t.hidden);
  read(train, "train", "shared_actor", t.shared_actor);
  read_number(train, "train", "init_log_std", t.init_log_std);
  read_count(train, "train", "checkpoint_interval", t.checkpoint_interval);
  read_count(train, "train", "seed", t.seed);

  const json eval = j.value("eval", json::object());
  only_keys(eval, "eval", {"episodes", "seed", "stochastic"});
  read_count(eval, "eval", "episodes", s.eval.episodes);
  if (eval.contains("seed") && !eval.at("seed").is_null()) {
    std::uint64_t seed = 0;
    read_count(eval, "eval", "seed", seed);
    s.eval.seed = seed;
  }
  read(eval, "eval", "stochastic", s.eval.stochastic);

  const json scripted = j.value("scripted", json::object());
  only_keys(scripted, "scripted", {"search"});
  if (scripted.contains("search")) {
    std::string p;
    read(scripted, "scripted", "search", p);
    s.search = parse_search_pattern(p);
  }

  g.validate();
  t.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read scenario file " + path.string());
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_scenario(buf.str());
}

std::string scenario_json(const Scenario& s) {
  const GameConfig& g = s.game;
  const TrainConfig& t = s.train;
  json defenders = json::array();
  for (const auto& d : g.defenders) {
    defenders.push_back({{"speed", d.speed},
                         {"sensing_radius", d.sensing_radius},
                         {"capture_radius", d.capture_radius},
                         {"can_capture", d.can_capture}});
  }
  json j;
  j["game"] = {{"team_size", g.n_defenders()},
               {"attacker_speed", g.attacker_speed},
               {"dt", g.dt},
               {"max_steps", g.max_steps},
               {"attacker_spawn", rect_json(g.attacker_spawn)},
               {"defender_spawn", rect_json(g.defender_spawn)}};
  j["defenders"] = defenders;
  j["reward"] = {{"mode", to_string(s.mode)}, {"gamma", t.gamma}};
  j["train"] = {{"lambda", t.lambda},
                {"clip", t.clip},
                {"actor_lr", t.actor_lr},
                {"critic_lr", t.critic_lr},
                {"epochs", t.epochs},
                {"minibatch", t.minibatch},
                {"rollout_frames", t.rollout_frames},
                {"n_envs", t.n_envs},
                {"frames", t.frames},
                {"entropy_coef", t.entropy_coef},
                {"entropy_decay", t.entropy_decay},
                {"max_grad_norm", t.max_grad_norm},
                {"hidden", t.hidden},
                {"shared_actor", t.shared_actor},
                {"init_log_std", t.init_log_std},
                {"checkpoint_interval", t.checkpoint_interval},
                {"seed", t.seed}};
  j["eval"] = {{"episodes", s.eval.episodes}, {"seed", s.eval.seed ? json(*s.eval.seed) : json(nullptr)}, {"stochastic", s.eval.stochastic}};
  j["scripted"] = {{"search", to_string(s.search)}};
  return j.dump(2) + "\n";
}

}  // namespace borderdef
