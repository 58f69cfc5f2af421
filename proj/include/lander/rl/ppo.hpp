#pragma once

#include <string>
#include <vector>

#include "lander/rl/gae.hpp"
#include "lander/rl/policy.hpp"

namespace lander::rl {

struct PpoConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_eps = 0.2;
  int epochs = 10;
  int minibatch = 64;
  int rollout_steps = 2048;
  int total_updates = 1500;
  double entropy_coef = 0.0;
  double lr = 3e-4;
  double max_grad_norm = 10.0;
  std::vector<int> hidden = {64, 64};
  bool layer_norm = false;
  double log_std_init = 0.0;
  // Start the mean main-thrust channel near weight-neutral hover instead of
  // the tanh midpoint (half thrust), which makes the untrained policy climb.
  bool hover_bias_init = true;
  int eval_interval = 10;   // updates between periodic evals
  int eval_episodes = 50;
  double target_success = 0.97;  // early stop once periodic eval reaches this

  void validate() const;
};

// Persistent environment cursor so episodes continue across rollout
// boundaries.
struct EnvCursor {
  sim::LanderState state;
  sim::WindVector wind;
  double prev_shaping = 0.0;
  long steps = 0;
  bool needs_reset = true;
};

// Collects exactly n_steps transitions under the current policy, continuing
// the cursor's episode and resetting on termination.
RolloutBatch collect_rollouts(const GaussianPolicy& policy, const ValueNet& value,
                              const sim::EnvConfig& env, EnvCursor& cursor, int n_steps, Rng& rng);

struct PpoObjective {
  double policy_loss = 0.0;   // negated clip surrogate (minimized)
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
};

// Clip surrogate + entropy bonus on one minibatch; accumulates gradients for
// the mean network, log_std and the value network.
PpoObjective ppo_clip_objective(const GaussianPolicy& policy, const Eigen::MatrixXd& obs,
                                const Eigen::MatrixXd& actions, const Eigen::VectorXd& old_log_probs,
                                const Eigen::VectorXd& advantages, double clip_eps,
                                double entropy_coef, nn::NetworkParams& mean_grad,
                                Eigen::Vector3d& log_std_grad);

struct EvalStats {
  double mean_return = 0.0;
  double std_return = 0.0;
  double success_rate = 0.0;
  double mean_length = 0.0;
};

// n seeded episodes; deterministic (mean) actions unless stochastic is set.
EvalStats eval_policy(const GaussianPolicy& policy, const sim::EnvConfig& env, int n,
                      std::uint64_t seed, bool stochastic = false);

struct PpoLogRow {
  int update = 0;
  long env_steps = 0;
  double mean_return = 0.0;
  double success_rate = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
};

struct PpoResult {
  GaussianPolicy policy;  // best-eval policy
  ValueNet value;
  std::vector<PpoLogRow> log;
  double best_return = 0.0;
  double best_success = 0.0;
  int best_update = -1;
};

PpoResult train_ppo(const sim::EnvConfig& env, const PpoConfig& config, std::uint64_t seed);

void write_ppo_log_csv(const std::vector<PpoLogRow>& log, const std::string& path);

}  // namespace lander::rl
