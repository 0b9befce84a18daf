// MAPPO: Gaussian actors over shared observations, a centralized critic over
// the full state, GAE, and clipped-surrogate updates.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "borderdef/env.hpp"
#include "borderdef/nn.hpp"

namespace borderdef {

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

struct TrainConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  double clip = 0.2;
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  int epochs = 4;
  std::size_t minibatch = 512;
  /// Frames gathered per iteration across all slots.
  std::size_t rollout_frames = 2048;
  std::size_t n_envs = 20;
  std::uint64_t frames = 300000;
  double entropy_coef = 0.01;
  bool entropy_decay = true;
  double max_grad_norm = 0.5;
  std::size_t hidden = 64;
  bool shared_actor = true;
  double init_log_std = -0.5;
  int eval_interval = 0;
  int checkpoint_interval = 25;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t steps_per_rollout() const;
};

/// Actor weights: one flat vector per actor holding the network parameters
/// followed by a state-independent log standard deviation.
struct PolicyParams {
  Mlp net;
  bool shared = true;
  std::size_t n_defenders = 1;
  std::size_t obs_width = 0;
  std::vector<std::vector<double>> actors;

  /// Observation, plus a one-hot defender id when one actor serves a team.
  std::size_t input_width() const { return obs_width + (uses_agent_id() ? n_defenders : 0); }
  bool uses_agent_id() const { return shared && n_defenders > 1; }
  std::size_t actor_index(std::size_t agent) const { return shared ? 0 : agent; }
  const std::vector<double>& actor(std::size_t agent) const { return actors[actor_index(agent)]; }
  std::span<const double> net_params(std::size_t agent) const;
  double raw_log_std(std::size_t agent) const { return actor(agent).back(); }
  double log_std(std::size_t agent) const;
  void encode_input(std::span<const double> obs, std::size_t agent, std::span<double> out) const;
};

struct CriticParams {
  Mlp net;
  std::vector<double> weights;
};

PolicyParams make_policy(std::size_t n_defenders, std::size_t obs_width, std::size_t hidden, bool shared,
                         double init_log_std, Rng& rng);
CriticParams make_critic(std::size_t state_width, std::size_t hidden, Rng& rng);

double gaussian_log_prob(double x, double mean, double log_std);
double gaussian_entropy(double log_std);

double action_mean(const PolicyParams& params, std::size_t agent, std::span<const double> obs);

struct ActionSample {
  /// Clamped to [-1, 1].
  double action = 0.0;
  /// Pre-clamp Gaussian draw; log_prob refers to it.
  double raw = 0.0;
  double log_prob = 0.0;
};

ActionSample sample_action(const PolicyParams& params, std::size_t agent, std::span<const double> obs, Rng& rng);

double critic_value(const CriticParams& critic, std::span<const double> state);

/// Rollout laid out time-major: index (t, env) = t * n_envs + env.
struct Trajectory {
  std::size_t steps = 0;
  std::size_t n_envs = 0;
  std::size_t n_defenders = 0;
  std::size_t obs_width = 0;
  std::size_t state_width = 0;
  std::vector<double> obs;
  std::vector<double> states;
  std::vector<double> raw_actions;
  std::vector<double> log_probs;
  /// Shared team reward per (t, env).
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<std::uint8_t> dones;
  /// V(s_T) for each slot after the last step.
  std::vector<double> bootstrap;

  void resize(std::size_t steps_, std::size_t n_envs_, std::size_t n_defenders_, std::size_t obs_width_,
              std::size_t state_width_);
  std::size_t transitions() const { return steps * n_envs; }
};

/// GAE over one slot's sequence; `done[t]` cuts the recursion after step t.
std::vector<double> gae(std::span<const double> rewards, std::span<const double> values,
                        std::span<const std::uint8_t> dones, double bootstrap, double gamma, double lambda);

/// Advantages for every (t, env) of a rollout.
std::vector<double> gae(const Trajectory& traj, double gamma, double lambda);

struct LossTerms {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;

  double total(double entropy_coef) const { return policy_loss + value_loss - entropy_coef * entropy; }
};

struct PpoBatch {
  const Trajectory* traj = nullptr;
  std::span<const double> advantages;
  std::span<const double> returns;
  std::span<const std::size_t> indices;
};

struct PpoGradients {
  std::vector<std::vector<double>> actors;
  std::vector<double> critic;
};

/// Clipped-surrogate policy loss, clipped value loss and entropy averaged
/// over the batch; gradients of total(entropy_coef) when `grads` is given.
LossTerms ppo_loss(const PolicyParams& policy, const CriticParams& critic, const PpoBatch& batch, double clip,
                   double entropy_coef, PpoGradients* grads = nullptr);

struct Optimizers {
  std::vector<Adam> actors;
  Adam critic;
};

Optimizers make_optimizers(const PolicyParams& policy, const CriticParams& critic, const TrainConfig& config);

struct UpdateStats {
  LossTerms loss;
  int minibatches = 0;
};

UpdateStats ppo_update(PolicyParams& policy, CriticParams& critic, Optimizers& optim, const Trajectory& traj,
                       const TrainConfig& config, double entropy_coef, Rng& rng);

struct TrainerState {
  PolicyParams policy;
  CriticParams critic;
  Optimizers optim;
  std::uint64_t frames = 0;
  std::uint64_t iteration = 0;
  std::uint64_t episodes = 0;
  Rng rng;
};

TrainerState make_trainer(const BatchEnv& env, const TrainConfig& config);

struct MetricsRow {
  std::uint64_t iteration = 0;
  std::uint64_t frames = 0;
  double mean_reward = 0.0;
  double std_reward = 0.0;
  double episode_length = 0.0;
  double sensing_rate = 0.0;
  std::uint64_t episodes = 0;
};

std::string metrics_header();
std::string to_csv(const MetricsRow& row);

struct TrainOptions {
  /// Metrics CSV and checkpoints land here when set.
  std::optional<std::filesystem::path> output_dir;
  std::optional<TrainerState> resume;
  std::function<void(const TrainerState&, const MetricsRow&)> on_iteration;
};

struct TrainResult {
  TrainerState state;
  std::vector<MetricsRow> metrics;
  std::vector<std::filesystem::path> checkpoints;
};

TrainResult train(BatchEnv& env, const TrainConfig& config, TrainOptions options = {});

void save_checkpoint(const std::filesystem::path& path, const TrainerState& state);
TrainerState load_checkpoint(const std::filesystem::path& path);

}  // namespace borderdef
