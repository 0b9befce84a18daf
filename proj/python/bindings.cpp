#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "borderdef/eval.hpp"
#include "borderdef/scenario.hpp"

namespace py = pybind11;
using namespace borderdef;

namespace {

PursuitConfig pursuit(std::pair<double, double> attacker, const std::vector<std::tuple<double, double, double>>& ds) {
  PursuitConfig pc;
  pc.attacker = {attacker.first, attacker.second};
  for (const auto& [x, y, nu] : ds) pc.capture_defenders.push_back({{x, y}, nu});
  return pc;
}

py::tuple xy(const Point2& p) { return py::make_tuple(p.x, p.y); }

py::array_t<double> array2d(const std::vector<double>& v, std::size_t rows, std::size_t cols) {
  py::array_t<double> a({rows, cols});
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["episodes"] = r.episodes;
  d["mode"] = to_string(r.mode);
  d["sensing_rate"] = r.sensing_rate;
  d["mean_reward"] = r.mean_reward;
  d["median_reward"] = r.median_reward;
  d["std_reward"] = r.std_reward;
  d["mean_length"] = r.mean_length;
  d["mean_nash"] = r.mean_nash;
  d["median_nash"] = r.median_nash;
  d["nash_payoffs"] = r.nash_payoffs;
  d["json"] = report_json(r);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Target-defense game core";
  m.attr("__version__") = "0.1.0";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);

  py::class_<DefenderSpec>(m, "DefenderSpec")
      .def(py::init<>())
      .def_readwrite("speed", &DefenderSpec::speed)
      .def_readwrite("sensing_radius", &DefenderSpec::sensing_radius)
      .def_readwrite("capture_radius", &DefenderSpec::capture_radius)
      .def_readwrite("can_capture", &DefenderSpec::can_capture);

  py::class_<GameConfig>(m, "GameConfig")
      .def_static("from_json", [](const std::string& text) { return parse_scenario(text).game; },
                  "Game section of a scenario document")
      .def_readwrite("attacker_speed", &GameConfig::attacker_speed)
      .def_readwrite("dt", &GameConfig::dt)
      .def_readwrite("max_steps", &GameConfig::max_steps)
      .def_readwrite("defenders", &GameConfig::defenders)
      .def_property_readonly("n_defenders", &GameConfig::n_defenders)
      .def("validate", &GameConfig::validate)
      .def("__repr__", [](const GameConfig& c) { return "GameConfig(" + config_fingerprint(c) + ")"; });

  m.def("reference_config", &reference_config, py::arg("n_defenders") = 1);

  m.def(
      "apollonius_circle",
      [](std::pair<double, double> a, std::pair<double, double> d, double nu) {
        const Circle c = apollonius_circle({a.first, a.second}, {d.first, d.second}, nu);
        return py::make_tuple(xy(c.center), c.radius);
      },
      py::arg("attacker"), py::arg("defender"), py::arg("nu"));

  m.def(
      "nash_payoff",
      [](std::pair<double, double> attacker, const std::vector<std::tuple<double, double, double>>& defenders) {
        const NashSolution s = nash_payoff_multi(pursuit(attacker, defenders));
        py::dict d;
        d["payoff"] = s.payoff;
        d["intercept"] = xy(s.intercept_point);
        d["unclamped"] = s.unclamped;
        d["clamped"] = s.clamped;
        return d;
      },
      py::arg("attacker"), py::arg("defenders"), "Nash payoff against defenders given as (x, y, nu)");

  m.def(
      "nash_payoff_oracle",
      [](std::pair<double, double> attacker, const std::vector<std::tuple<double, double, double>>& defenders,
         int resolution) { return nash_payoff_oracle(pursuit(attacker, defenders), resolution); },
      py::arg("attacker"), py::arg("defenders"), py::arg("resolution") = 2000);

  m.def(
      "payoff_landscape",
      [](std::pair<double, double> attacker, const std::vector<std::tuple<double, double, double>>& fixed, double nu,
         std::pair<double, double> xr, std::pair<double, double> yr, int nx, int ny) {
        const Landscape l = payoff_landscape(pursuit(attacker, fixed), nu, {xr.first, xr.second, yr.first, yr.second, nx, ny});
        return array2d(l.values, static_cast<std::size_t>(ny), static_cast<std::size_t>(nx));
      },
      py::arg("attacker"), py::arg("fixed_defenders"), py::arg("nu"), py::arg("x_range") = std::make_pair(0.0, 1.0),
      py::arg("y_range") = std::make_pair(0.0, 1.0), py::arg("nx") = 101, py::arg("ny") = 101,
      "Rows follow y, columns follow x; failed cells are NaN");

  m.def("decode_action", [](double a) { return xy(decode_action(a)); });
  m.def("saved_steps_estimate", &saved_steps_estimate);

  py::class_<BatchEnv>(m, "BatchEnv")
      .def(py::init([](const GameConfig& c, const std::string& mode, std::size_t n_envs, std::uint64_t seed) {
             return BatchEnv(c, parse_mode(mode), n_envs, seed);
           }),
           py::arg("config"), py::arg("mode") = "gt", py::arg("n_envs") = 20, py::arg("seed") = 0)
      .def("reset", &BatchEnv::reset)
      .def_property_readonly("n_envs", &BatchEnv::n_envs)
      .def_property_readonly("n_defenders", &BatchEnv::n_defenders)
      .def_property_readonly("obs_width", &BatchEnv::obs_width)
      .def("observations",
           [](const BatchEnv& e) {
             py::array_t<double> a({e.n_envs(), e.n_defenders(), e.obs_width()});
             e.write_observations(std::span<double>(a.mutable_data(), static_cast<std::size_t>(a.size())));
             return a;
           })
      .def("step", [](BatchEnv& e, py::array_t<double, py::array::c_style | py::array::forcecast> actions) {
        if (static_cast<std::size_t>(actions.size()) != e.n_envs() * e.n_defenders()) {
          throw py::value_error("actions must hold n_envs * n_defenders values");
        }
        const BatchStep s = e.step(std::span<const double>(actions.data(), static_cast<std::size_t>(actions.size())));
        py::array_t<double> obs({e.n_envs(), e.n_defenders(), e.obs_width()});
        std::copy(s.observations.begin(), s.observations.end(), obs.mutable_data());
        py::list infos;
        for (const auto& i : s.infos) {
          py::dict d;
          d["slot"] = i.slot;
          d["episode"] = i.episode;
          d["terminal"] = to_string(i.terminal);
          d["reward"] = i.reward;
          d["length"] = i.length;
          d["sensing_step"] = i.sensing_step;
          d["nash_at_sensing"] = i.nash_at_sensing;
          infos.append(d);
        }
        std::vector<bool> dones(s.dones.begin(), s.dones.end());
        return py::make_tuple(obs, array2d(s.rewards, e.n_envs(), e.n_defenders()), py::array(py::cast(dones)),
                              infos);
      });

  m.def(
      "train",
      [](const std::string& scenario_text, std::optional<std::uint64_t> frames, std::uint64_t seed,
         std::optional<std::filesystem::path> out) {
        Scenario sc = parse_scenario(scenario_text);
        if (frames) sc.train.frames = *frames;
        sc.train.seed = seed;
        TrainResult r;
        {
          py::gil_scoped_release release;
          BatchEnv env(sc.game, sc.mode, sc.train.n_envs, seed, sc.train.gamma);
          TrainOptions o;
          o.output_dir = out;
          r = train(env, sc.train, o);
        }
        py::list rows;
        for (const auto& m : r.metrics) {
          py::dict d;
          d["iteration"] = m.iteration;
          d["frames"] = m.frames;
          d["mean_reward"] = m.mean_reward;
          d["std_reward"] = m.std_reward;
          d["episode_length"] = m.episode_length;
          d["sensing_rate"] = m.sensing_rate;
          d["episodes"] = m.episodes;
          rows.append(d);
        }
        std::vector<std::string> cks;
        for (const auto& c : r.checkpoints) cks.push_back(c.string());
        return py::make_tuple(rows, cks);
      },
      py::arg("scenario") = "{}", py::arg("frames") = py::none(), py::arg("seed") = 0, py::arg("out_dir") = py::none(),
      "Train from a scenario JSON string; returns (metrics rows, checkpoint paths)");

  m.def(
      "evaluate_checkpoint",
      [](const std::filesystem::path& checkpoint, const std::string& scenario_text, std::size_t episodes,
         std::uint64_t seed) {
        const Scenario sc = parse_scenario(scenario_text);
        const TrainerState st = load_checkpoint(checkpoint);
        EvalReport r;
        {
          py::gil_scoped_release release;
          r = evaluate(st.policy, sc.game, sc.mode, episodes, seed, sc.eval.stochastic);
        }
        return report_dict(r);
      },
      py::arg("checkpoint"), py::arg("scenario") = "{}", py::arg("episodes") = 1000, py::arg("seed") = 0);

  m.def(
      "evaluate_scripted",
      [](const std::string& scenario_text, std::size_t episodes, std::uint64_t seed) {
        const Scenario sc = parse_scenario(scenario_text);
        EvalReport r;
        {
          py::gil_scoped_release release;
          r = evaluate_policy(scripted_policy(sc.search), sc.game, sc.mode, episodes, seed);
        }
        return report_dict(r);
      },
      py::arg("scenario") = "{}", py::arg("episodes") = 1000, py::arg("seed") = 0);
}
