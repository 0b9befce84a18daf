#include "borderdef/learn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace borderdef {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

void TrainConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("train.gamma must lie in [0, 1)");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("train.lambda must lie in [0, 1]");
  if (!(clip > 0.0)) throw ConfigError("train.clip must be positive");
  if (!(actor_lr >= 0.0) || !(critic_lr >= 0.0)) throw ConfigError("learning rates must be >= 0");
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (minibatch < 1) throw ConfigError("train.minibatch must be >= 1");
  if (n_envs < 1) throw ConfigError("train.n_envs must be >= 1");
  if (rollout_frames < n_envs) throw ConfigError("train.rollout_frames must be >= train.n_envs");
  if (hidden < 1) throw ConfigError("train.hidden must be >= 1");
  if (!(init_log_std >= kLogStdMin && init_log_std <= kLogStdMax)) throw ConfigError("train.init_log_std out of range");
}

std::size_t TrainConfig::steps_per_rollout() const { return rollout_frames / n_envs; }

std::span<const double> PolicyParams::net_params(std::size_t agent) const {
  const auto& a = actor(agent);
  return {a.data(), a.size() - 1};
}

double PolicyParams::log_std(std::size_t agent) const {
  return std::clamp(raw_log_std(agent), kLogStdMin, kLogStdMax);
}

void PolicyParams::encode_input(std::span<const double> obs, std::size_t agent, std::span<double> out) const {
  std::copy(obs.begin(), obs.end(), out.begin());
  if (!uses_agent_id()) return;
  for (std::size_t k = 0; k < n_defenders; ++k) out[obs_width + k] = k == agent ? 1.0 : 0.0;
}

PolicyParams make_policy(std::size_t n_defenders, std::size_t obs_width, std::size_t hidden, bool shared,
                         double init_log_std, Rng& rng) {
  PolicyParams p;
  p.shared = shared;
  p.n_defenders = n_defenders;
  p.obs_width = obs_width;
  p.net = Mlp({p.input_width(), hidden, hidden, 1});
  const std::size_t count = shared ? 1 : n_defenders;
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<double> w = p.net.init(rng, 0.01);
    w.push_back(init_log_std);
    p.actors.push_back(std::move(w));
  }
  return p;
}

CriticParams make_critic(std::size_t state_width, std::size_t hidden, Rng& rng) {
  CriticParams c;
  c.net = Mlp({state_width, hidden, hidden, 1});
  c.weights = c.net.init(rng, 1.0);
  return c;
}

double gaussian_log_prob(double x, double mean, double log_std) {
  const double z = (x - mean) * std::exp(-log_std);
  return -0.5 * z * z - log_std - kHalfLog2Pi;
}

double gaussian_entropy(double log_std) { return log_std + 0.5 + kHalfLog2Pi; }

double action_mean(const PolicyParams& params, std::size_t agent, std::span<const double> obs) {
  std::vector<double> input(params.input_width());
  params.encode_input(obs, agent, input);
  Mlp::Workspace ws;
  params.net.forward(params.net_params(agent), input, ws);
  const double mu = params.net.output(ws)[0];
  if (!std::isfinite(mu)) throw DivergenceError("policy produced a non-finite action mean");
  return mu;
}

ActionSample sample_action(const PolicyParams& params, std::size_t agent, std::span<const double> obs, Rng& rng) {
  const double mu = action_mean(params, agent, obs);
  const double ls = params.log_std(agent);
  std::normal_distribution<double> normal(0.0, 1.0);
  ActionSample s;
  s.raw = mu + std::exp(ls) * normal(rng);
  s.action = std::clamp(s.raw, -1.0, 1.0);
  s.log_prob = gaussian_log_prob(s.raw, mu, ls);
  return s;
}

double critic_value(const CriticParams& critic, std::span<const double> state) {
  Mlp::Workspace ws;
  critic.net.forward(critic.weights, state, ws);
  return critic.net.output(ws)[0];
}

void Trajectory::resize(std::size_t steps_, std::size_t n_envs_, std::size_t n_defenders_, std::size_t obs_width_,
                        std::size_t state_width_) {
  steps = steps_;
  n_envs = n_envs_;
  n_defenders = n_defenders_;
  obs_width = obs_width_;
  state_width = state_width_;
  const std::size_t n = steps * n_envs;
  obs.assign(n * n_defenders * obs_width, 0.0);
  states.assign(n * state_width, 0.0);
  raw_actions.assign(n * n_defenders, 0.0);
  log_probs.assign(n * n_defenders, 0.0);
  rewards.assign(n, 0.0);
  values.assign(n, 0.0);
  dones.assign(n, 0);
  bootstrap.assign(n_envs, 0.0);
}

std::vector<double> gae(std::span<const double> rewards, std::span<const double> values,
                        std::span<const std::uint8_t> dones, double bootstrap, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  std::vector<double> adv(n, 0.0);
  double running = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const bool done = dones[t] != 0;
    const double next_value = done ? 0.0 : (t + 1 < n ? values[t + 1] : bootstrap);
    const double delta = rewards[t] + gamma * next_value - values[t];
    running = delta + (done ? 0.0 : gamma * lambda * running);
    adv[t] = running;
  }
  return adv;
}

std::vector<double> gae(const Trajectory& traj, double gamma, double lambda) {
  const std::size_t T = traj.steps;
  const std::size_t E = traj.n_envs;
  std::vector<double> out(T * E, 0.0);
  std::vector<double> r(T), v(T);
  std::vector<std::uint8_t> d(T);
  for (std::size_t e = 0; e < E; ++e) {
    for (std::size_t t = 0; t < T; ++t) {
      r[t] = traj.rewards[t * E + e];
      v[t] = traj.values[t * E + e];
      d[t] = traj.dones[t * E + e];
    }
    const std::vector<double> a = gae(r, v, d, traj.bootstrap[e], gamma, lambda);
    for (std::size_t t = 0; t < T; ++t) out[t * E + e] = a[t];
  }
  return out;
}

LossTerms ppo_loss(const PolicyParams& policy, const CriticParams& critic, const PpoBatch& batch, double clip,
                   double entropy_coef, PpoGradients* grads) {
  const Trajectory& tr = *batch.traj;
  const std::size_t nd = tr.n_defenders;
  const std::size_t w = tr.obs_width;
  const double n_act = static_cast<double>(batch.indices.size() * nd);
  const double n_val = static_cast<double>(batch.indices.size());

  LossTerms out;
  Mlp::Workspace ws;
  std::vector<double> input(policy.input_width());
  double dout[1];

  for (const std::size_t idx : batch.indices) {
    const double adv = batch.advantages[idx];
    for (std::size_t k = 0; k < nd; ++k) {
      const std::size_t s = idx * nd + k;
      policy.encode_input(std::span<const double>(tr.obs).subspan(s * w, w), k, input);
      const auto params = policy.net_params(k);
      policy.net.forward(params, input, ws);
      const double mu = policy.net.output(ws)[0];
      const double raw_ls = policy.raw_log_std(k);
      const double ls = std::clamp(raw_ls, kLogStdMin, kLogStdMax);
      const double z = tr.raw_actions[s];
      const double lp = gaussian_log_prob(z, mu, ls);
      const double ratio = std::exp(lp - tr.log_probs[s]);
      const double unclipped = ratio * adv;
      const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip) * adv;

      out.policy_loss -= std::min(unclipped, clipped) / n_act;
      out.entropy += gaussian_entropy(ls) / n_act;
      out.approx_kl += (tr.log_probs[s] - lp) / n_act;
      if (std::abs(ratio - 1.0) > clip) out.clip_fraction += 1.0 / n_act;

      if (grads == nullptr) continue;
      // Only the unclipped branch carries gradient; when the clipped branch
      // is the minimum the ratio sits outside the trust region.
      const double dloss_dlp = unclipped <= clipped ? -adv * ratio / n_act : 0.0;
      const double inv_var = std::exp(-2.0 * ls);
      const double dlp_dmu = (z - mu) * inv_var;
      const double dlp_dls = (z - mu) * (z - mu) * inv_var - 1.0;
      auto& g = grads->actors[policy.actor_index(k)];
      dout[0] = dloss_dlp * dlp_dmu;
      policy.net.backward(params, ws, dout, std::span<double>(g.data(), g.size() - 1));
      if (raw_ls > kLogStdMin && raw_ls < kLogStdMax) {
        g.back() += dloss_dlp * dlp_dls - entropy_coef / n_act;
      }
    }

    const std::size_t sw = tr.state_width;
    critic.net.forward(critic.weights, std::span<const double>(tr.states).subspan(idx * sw, sw), ws);
    const double v = critic.net.output(ws)[0];
    const double v_old = tr.values[idx];
    const double ret = batch.returns[idx];
    const double v_clip = v_old + std::clamp(v - v_old, -clip, clip);
    const double l1 = (v - ret) * (v - ret);
    const double l2 = (v_clip - ret) * (v_clip - ret);
    out.value_loss += 0.5 * std::max(l1, l2) / n_val;
    if (grads == nullptr) continue;
    double dv = 0.0;
    if (l1 >= l2) {
      dv = (v - ret) / n_val;
    } else if (std::abs(v - v_old) < clip) {
      dv = (v_clip - ret) / n_val;
    }
    dout[0] = dv;
    critic.net.backward(critic.weights, ws, dout, grads->critic);
  }
  return out;
}

Optimizers make_optimizers(const PolicyParams& policy, const CriticParams& critic, const TrainConfig& config) {
  Optimizers o;
  for (const auto& a : policy.actors) o.actors.emplace_back(a.size(), config.actor_lr);
  o.critic = Adam(critic.weights.size(), config.critic_lr);
  return o;
}

UpdateStats ppo_update(PolicyParams& policy, CriticParams& critic, Optimizers& optim, const Trajectory& traj,
                       const TrainConfig& config, double entropy_coef, Rng& rng) {
  const std::size_t n = traj.transitions();
  if (n == 0) throw std::invalid_argument("ppo_update: empty batch");

  const std::vector<double> adv = gae(traj, config.gamma, config.lambda);
  std::vector<double> returns(n);
  for (std::size_t i = 0; i < n; ++i) returns[i] = adv[i] + traj.values[i];

  const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  std::vector<double> norm_adv(n);
  for (std::size_t i = 0; i < n; ++i) norm_adv[i] = (adv[i] - mean) / (sd + 1e-8);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  PpoGradients grads;
  for (const auto& a : policy.actors) grads.actors.emplace_back(a.size(), 0.0);
  grads.critic.assign(critic.weights.size(), 0.0);

  UpdateStats stats;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += config.minibatch) {
      const std::size_t len = std::min(config.minibatch, n - start);
      for (auto& g : grads.actors) std::fill(g.begin(), g.end(), 0.0);
      std::fill(grads.critic.begin(), grads.critic.end(), 0.0);

      PpoBatch batch{&traj, norm_adv, returns, std::span<const std::size_t>(order).subspan(start, len)};
      const LossTerms loss = ppo_loss(policy, critic, batch, config.clip, entropy_coef, &grads);
      if (!std::isfinite(loss.total(entropy_coef))) {
        throw DivergenceError("PPO loss became non-finite at iteration update");
      }
      for (std::size_t a = 0; a < policy.actors.size(); ++a) {
        clip_grad_norm(grads.actors[a], config.max_grad_norm);
        optim.actors[a].step(policy.actors[a], grads.actors[a]);
        if (!all_finite(policy.actors[a])) throw DivergenceError("actor weights became non-finite");
      }
      clip_grad_norm(grads.critic, config.max_grad_norm);
      optim.critic.step(critic.weights, grads.critic);
      if (!all_finite(critic.weights)) throw DivergenceError("critic weights became non-finite");

      stats.loss.policy_loss += loss.policy_loss;
      stats.loss.value_loss += loss.value_loss;
      stats.loss.entropy += loss.entropy;
      stats.loss.approx_kl += loss.approx_kl;
      stats.loss.clip_fraction += loss.clip_fraction;
      ++stats.minibatches;
    }
  }
  const double m = static_cast<double>(stats.minibatches);
  stats.loss.policy_loss /= m;
  stats.loss.value_loss /= m;
  stats.loss.entropy /= m;
  stats.loss.approx_kl /= m;
  stats.loss.clip_fraction /= m;
  return stats;
}

TrainerState make_trainer(const BatchEnv& env, const TrainConfig& config) {
  config.validate();
  TrainerState s;
  s.rng = make_rng(config.seed, 0x7261696eULL);
  s.policy = make_policy(env.n_defenders(), env.obs_width(), config.hidden, config.shared_actor, config.init_log_std,
                         s.rng);
  s.critic = make_critic(env.state_width(), config.hidden, s.rng);
  s.optim = make_optimizers(s.policy, s.critic, config);
  return s;
}

std::string metrics_header() { return "iteration,frames,mean_reward,std_reward,episode_length,sensing_rate,episodes"; }

std::string to_csv(const MetricsRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%llu,%llu,%.10g,%.10g,%.10g,%.10g,%llu", static_cast<unsigned long long>(r.iteration),
                static_cast<unsigned long long>(r.frames), r.mean_reward, r.std_reward, r.episode_length,
                r.sensing_rate, static_cast<unsigned long long>(r.episodes));
  return buf;
}

namespace {

MetricsRow summarize(const std::vector<EpisodeInfo>& infos) {
  MetricsRow row;
  row.episodes = infos.size();
  if (infos.empty()) return row;
  const double n = static_cast<double>(infos.size());
  double sensed = 0.0;
  for (const auto& e : infos) {
    row.mean_reward += e.reward / n;
    row.episode_length += e.length / n;
    if (e.sensing_step) sensed += 1.0;
  }
  double var = 0.0;
  for (const auto& e : infos) var += (e.reward - row.mean_reward) * (e.reward - row.mean_reward);
  row.std_reward = std::sqrt(var / n);
  row.sensing_rate = sensed / n;
  return row;
}

}  // namespace

TrainResult train(BatchEnv& env, const TrainConfig& config, TrainOptions options) {
  config.validate();
  if (env.n_envs() != config.n_envs) throw ConfigError("train: env slot count does not match train.n_envs");

  TrainResult result;
  TrainerState& st = result.state;
  if (options.resume) {
    st = std::move(*options.resume);
    if (st.policy.obs_width != env.obs_width() || st.policy.n_defenders != env.n_defenders()) {
      throw ConfigError("train: checkpoint layout does not match the environment");
    }
  } else {
    st = make_trainer(env, config);
  }

  std::ofstream metrics;
  if (options.output_dir) {
    std::filesystem::create_directories(*options.output_dir);
    const auto path = *options.output_dir / "metrics.csv";
    const bool fresh = !options.resume || !std::filesystem::exists(path);
    metrics.open(path, fresh ? std::ios::trunc : std::ios::app);
    if (fresh) metrics << metrics_header() << "\n";
  }

  const std::size_t E = env.n_envs();
  const std::size_t nd = env.n_defenders();
  const std::size_t ow = env.obs_width();
  const std::size_t sw = env.state_width();
  const std::size_t T = config.steps_per_rollout();

  Trajectory traj;
  traj.resize(T, E, nd, ow, sw);
  std::vector<double> obs = env.observations();
  std::vector<double> states = env.states();
  std::vector<double> actions(E * nd);
  std::vector<EpisodeInfo> finished;

  const auto write_checkpoint = [&]() {
    if (!options.output_dir) return;
    char name[64];
    std::snprintf(name, sizeof name, "checkpoint_%08llu.json", static_cast<unsigned long long>(st.frames));
    const auto path = *options.output_dir / name;
    save_checkpoint(path, st);
    result.checkpoints.push_back(path);
  };

  while (st.frames < config.frames) {
    finished.clear();
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t base = t * E;
      std::copy(obs.begin(), obs.end(), traj.obs.begin() + static_cast<std::ptrdiff_t>(base * nd * ow));
      std::copy(states.begin(), states.end(), traj.states.begin() + static_cast<std::ptrdiff_t>(base * sw));
      for (std::size_t e = 0; e < E; ++e) {
        for (std::size_t k = 0; k < nd; ++k) {
          const std::size_t s = e * nd + k;
          const ActionSample a =
              sample_action(st.policy, k, std::span<const double>(obs).subspan(s * ow, ow), st.rng);
          actions[s] = a.action;
          traj.raw_actions[base * nd + s] = a.raw;
          traj.log_probs[base * nd + s] = a.log_prob;
        }
        traj.values[base + e] = critic_value(st.critic, std::span<const double>(states).subspan(e * sw, sw));
      }
      BatchStep res = env.step(actions);
      for (std::size_t e = 0; e < E; ++e) {
        traj.rewards[base + e] = res.rewards[e * nd];
        traj.dones[base + e] = res.dones[e];
      }
      finished.insert(finished.end(), res.infos.begin(), res.infos.end());
      obs = std::move(res.observations);
      states = std::move(res.states);
    }
    for (std::size_t e = 0; e < E; ++e) {
      traj.bootstrap[e] = critic_value(st.critic, std::span<const double>(states).subspan(e * sw, sw));
    }

    const double progress = static_cast<double>(st.frames) / static_cast<double>(config.frames);
    const double ent = config.entropy_decay ? config.entropy_coef * std::max(0.0, 1.0 - progress) : config.entropy_coef;
    ppo_update(st.policy, st.critic, st.optim, traj, config, ent, st.rng);

    st.frames += T * E;
    ++st.iteration;
    st.episodes += finished.size();

    MetricsRow row = summarize(finished);
    row.iteration = st.iteration;
    row.frames = st.frames;
    result.metrics.push_back(row);
    if (metrics.is_open()) metrics << to_csv(row) << "\n" << std::flush;
    if (options.on_iteration) options.on_iteration(st, row);

    if (config.checkpoint_interval > 0 && st.iteration % static_cast<std::uint64_t>(config.checkpoint_interval) == 0 &&
        st.frames < config.frames) {
      write_checkpoint();
    }
  }
  write_checkpoint();
  return result;
}

namespace {

using nlohmann::json;

json adam_to_json(const Adam& a) {
  return {{"lr", a.lr}, {"beta1", a.beta1}, {"beta2", a.beta2}, {"eps", a.eps}, {"t", a.t}, {"m", a.m}, {"v", a.v}};
}

Adam adam_from_json(const json& j) {
  Adam a;
  a.lr = j.at("lr");
  a.beta1 = j.at("beta1");
  a.beta2 = j.at("beta2");
  a.eps = j.at("eps");
  a.t = j.at("t");
  a.m = j.at("m").get<std::vector<double>>();
  a.v = j.at("v").get<std::vector<double>>();
  return a;
}

constexpr const char* kCheckpointFormat = "borderdef-checkpoint";
constexpr int kCheckpointVersion = 1;

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TrainerState& s) {
  json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["layout"] = {{"n_defenders", s.policy.n_defenders},
                 {"obs_width", s.policy.obs_width},
                 {"shared_actor", s.policy.shared},
                 {"actor_sizes", s.policy.net.sizes()},
                 {"actor_params_per_net", s.policy.net.param_count() + 1},
                 {"critic_sizes", s.critic.net.sizes()},
                 {"critic_params", s.critic.net.param_count()},
                 {"activation", "tanh"},
                 {"param_order", "per layer: W (out x in, row-major), b (out); actor adds trailing log_std"}};
  j["frames"] = s.frames;
  j["iteration"] = s.iteration;
  j["episodes"] = s.episodes;
  j["actors"] = s.policy.actors;
  j["critic"] = s.critic.weights;
  json opt_actors = json::array();
  for (const auto& a : s.optim.actors) opt_actors.push_back(adam_to_json(a));
  j["optim"] = {{"actors", opt_actors}, {"critic", adam_to_json(s.optim.critic)}};
  std::ostringstream rng;
  rng << s.rng;
  j["rng"] = rng.str();

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write checkpoint " + tmp.string());
    f << j.dump() << "\n";
  }
  std::filesystem::rename(tmp, path);
}

TrainerState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open checkpoint " + path.string());
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  if (j.value("format", "") != kCheckpointFormat || j.value("version", 0) != kCheckpointVersion) {
    throw ConfigError("checkpoint " + path.string() + " has an unsupported format");
  }
  TrainerState s;
  const json& layout = j.at("layout");
  s.policy.n_defenders = layout.at("n_defenders");
  s.policy.obs_width = layout.at("obs_width");
  s.policy.shared = layout.at("shared_actor");
  s.policy.net = Mlp(layout.at("actor_sizes").get<std::vector<std::size_t>>());
  s.policy.actors = j.at("actors").get<std::vector<std::vector<double>>>();
  s.critic.net = Mlp(layout.at("critic_sizes").get<std::vector<std::size_t>>());
  s.critic.weights = j.at("critic").get<std::vector<double>>();
  if (s.policy.net.input_size() != s.policy.input_width()) throw ConfigError("checkpoint actor input width mismatch");
  for (const auto& a : s.policy.actors) {
    if (a.size() != s.policy.net.param_count() + 1) throw ConfigError("checkpoint actor parameter count mismatch");
  }
  if (s.critic.weights.size() != s.critic.net.param_count()) throw ConfigError("checkpoint critic size mismatch");
  s.frames = j.at("frames");
  s.iteration = j.at("iteration");
  s.episodes = j.value("episodes", 0ULL);
  for (const auto& a : j.at("optim").at("actors")) s.optim.actors.push_back(adam_from_json(a));
  s.optim.critic = adam_from_json(j.at("optim").at("critic"));
  std::istringstream rng(j.at("rng").get<std::string>());
  rng >> s.rng;
  return s;
}

}  // namespace borderdef
