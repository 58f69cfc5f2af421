#include "lander/rl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lander/common/error.hpp"
#include "lander/common/io.hpp"
#include "lander/nn/adam.hpp"

namespace lander::rl {

void PpoConfig::validate() const {
  if (gamma <= 0.0 || gamma > 1.0 || gae_lambda <= 0.0 || gae_lambda > 1.0)
    throw ConfigError("ppo: gamma and gae_lambda must lie in (0, 1]");
  if (clip_eps <= 0.0 || clip_eps >= 1.0) throw ConfigError("ppo: clip_eps must lie in (0, 1)");
  if (rollout_steps <= 0 || minibatch <= 0 || epochs <= 0 || total_updates <= 0)
    throw ConfigError("ppo: sizes must be positive");
}

RolloutBatch collect_rollouts(const GaussianPolicy& policy, const ValueNet& value,
                              const sim::EnvConfig& env, EnvCursor& cursor, int n_steps, Rng& rng) {
  RolloutBatch batch;
  batch.observations.resize(8, n_steps);
  batch.actions.resize(3, n_steps);
  batch.log_probs.resize(n_steps);
  batch.rewards.resize(n_steps);
  batch.values.resize(n_steps);
  batch.terminal.assign(static_cast<std::size_t>(n_steps), 0);
  batch.truncated.assign(static_cast<std::size_t>(n_steps), 0);
  batch.bootstrap_values = Eigen::VectorXd::Zero(n_steps);

  sim::Vector8d next_obs = sim::Vector8d::Zero();
  for (int t = 0; t < n_steps; ++t) {
    if (cursor.needs_reset) {
      auto [init, wind] = sample_initial(env.bounds, rng);
      cursor.state = init;
      cursor.wind = env.wind_enabled ? wind : sim::WindVector{0.0, 0.0};
      cursor.prev_shaping = shaping(cursor.state, cursor.wind, env.reward.maxima);
      cursor.steps = 0;
      cursor.needs_reset = false;
      batch.episode_starts.push_back(t);
    }
    const sim::Vector8d obs = sim::make_observation(cursor.state, cursor.wind);
    const Eigen::Vector3d action = policy.act_sample(obs, rng);
    if (!action.allFinite()) throw DivergenceError("ppo rollout: non-finite action");
    const sim::ControlInput u = action_to_control(action, env.params).clamped(env.params);
    const sim::LanderState next = rk4_step(cursor.state, u, cursor.wind, env.params, env.params.dt);
    const double r = sim::reward(cursor.prev_shaping, next, u, cursor.wind, env.reward, env.params);

    batch.observations.col(t) = obs;
    batch.actions.col(t) = action;
    batch.rewards[t] = r;

    cursor.prev_shaping = sim::shaping(next, cursor.wind, env.reward.maxima);
    cursor.state = next;
    cursor.steps += 1;
    const auto status =
        sim::terminal_and_success(next, cursor.wind, env.bounds, cursor.steps, env.max_steps);
    if (status.is_terminal) {
      batch.terminal[static_cast<std::size_t>(t)] = 1;
      cursor.needs_reset = true;
    } else if (t == n_steps - 1) {
      batch.truncated[static_cast<std::size_t>(t)] = 1;
      next_obs = sim::make_observation(next, cursor.wind);
    }
  }
  // batched value and log-prob passes
  batch.values = value.value(batch.observations);
  batch.log_probs = policy.log_prob(policy.mean(batch.observations), batch.actions);
  if (batch.truncated.back())
    batch.bootstrap_values[n_steps - 1] = value.value(next_obs)[0];
  return batch;
}

PpoObjective ppo_clip_objective(const GaussianPolicy& policy, const Eigen::MatrixXd& obs,
                                const Eigen::MatrixXd& actions, const Eigen::VectorXd& old_log_probs,
                                const Eigen::VectorXd& advantages, double clip_eps,
                                double entropy_coef, nn::NetworkParams& mean_grad,
                                Eigen::Vector3d& log_std_grad) {
  const long n = obs.cols();
  nn::GradientRecord rec;
  const Eigen::MatrixXd mean = policy.mean(obs, &rec);
  const Eigen::VectorXd log_probs = policy.log_prob(mean, actions);
  const Eigen::ArrayXd ratio = (log_probs - old_log_probs).array().exp();

  PpoObjective out;
  long clipped = 0;
  // d(policy_loss)/d(log_prob_i); zero where the clipped branch is active
  Eigen::VectorXd d_logp = Eigen::VectorXd::Zero(n);
  double surrogate = 0.0;
  for (long i = 0; i < n; ++i) {
    const double a = advantages[i];
    const double unclipped = ratio[i] * a;
    const double clip_term = (a >= 0.0 ? 1.0 + clip_eps : 1.0 - clip_eps) * a;
    if (unclipped <= clip_term) {
      surrogate += unclipped;
      d_logp[i] = -unclipped / static_cast<double>(n);  // minimize -surrogate
    } else {
      surrogate += clip_term;
      ++clipped;
    }
  }
  surrogate /= static_cast<double>(n);
  out.policy_loss = -surrogate;
  out.entropy = policy.entropy();
  out.clip_fraction = static_cast<double>(clipped) / static_cast<double>(n);

  // gradient of log N(a; mean, sigma) wrt mean and log_std
  const Eigen::Array3d inv_var = (-2.0 * policy.log_std.array()).exp();
  Eigen::MatrixXd d_mean(3, n);
  for (long i = 0; i < n; ++i) {
    const Eigen::Array3d diff = (actions.col(i) - mean.col(i)).array();
    d_mean.col(i) = (d_logp[i] * diff * inv_var).matrix();
    log_std_grad += (d_logp[i] * (diff.square() * inv_var - 1.0)).matrix();
  }
  log_std_grad -= entropy_coef * Eigen::Vector3d::Ones();  // d(-c*H)/d(log_std)
  nn::backward(policy.mean_net, rec, d_mean, mean_grad);
  return out;
}

EvalStats eval_policy(const GaussianPolicy& policy, const sim::EnvConfig& env, int n,
                      std::uint64_t seed, bool stochastic) {
  EvalStats stats;
  std::vector<double> returns;
  returns.reserve(static_cast<std::size_t>(n));
  long successes = 0;
  double total_len = 0.0;
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, "eval-episode-" + std::to_string(i)));
    auto [init, wind] = sample_initial(env.bounds, rng);
    const sim::PolicyFn fn = stochastic ? policy.as_stochastic_fn(env.params, rng)
                                        : policy.as_policy_fn(env.params);
    const sim::Trajectory traj = simulate_episode(fn, init, wind, env);
    returns.push_back(std::accumulate(traj.rewards.begin(), traj.rewards.end(), 0.0));
    successes += traj.success ? 1 : 0;
    total_len += static_cast<double>(traj.controls.size());
  }
  const double mean =
      std::accumulate(returns.begin(), returns.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double r : returns) var += (r - mean) * (r - mean);
  stats.mean_return = mean;
  stats.std_return = std::sqrt(var / static_cast<double>(n));
  stats.success_rate = static_cast<double>(successes) / static_cast<double>(n);
  stats.mean_length = total_len / static_cast<double>(n);
  return stats;
}

PpoResult train_ppo(const sim::EnvConfig& env, const PpoConfig& config, std::uint64_t seed) {
  config.validate();
  Rng init_rng(derive_seed(seed, "ppo-init"));
  Rng rollout_rng(derive_seed(seed, "ppo-rollout"));
  Rng shuffle_rng(derive_seed(seed, "ppo-shuffle"));

  PpoResult res;
  res.policy = GaussianPolicy::make(config.hidden, config.layer_norm, config.log_std_init, init_rng);
  res.value = ValueNet::make(config.hidden, config.layer_norm, init_rng);
  if (config.hover_bias_init) {
    const double hover = 2.0 * env.params.mass * env.params.gravity / env.params.u_max[0] - 1.0;
    res.policy.mean_net.block("out.b")(0, 0) = std::atanh(std::clamp(hover, -0.99, 0.99));
  }
  GaussianPolicy best = res.policy;

  nn::AdamConfig adam_cfg;
  adam_cfg.lr = config.lr;
  nn::AdamState opt_mean(res.policy.mean_net.size(), adam_cfg);
  nn::AdamState opt_log_std(3, adam_cfg);
  nn::AdamState opt_value(res.value.net.size(), adam_cfg);

  EnvCursor cursor;
  std::vector<long> order(static_cast<std::size_t>(config.rollout_steps));
  std::iota(order.begin(), order.end(), 0);

  for (int update = 1; update <= config.total_updates; ++update) {
    RolloutBatch batch =
        collect_rollouts(res.policy, res.value, env, cursor, config.rollout_steps, rollout_rng);
    GaeResult gae = compute_gae(batch, config.gamma, config.gae_lambda);
    Eigen::VectorXd adv = gae.advantages;
    normalize_advantages(adv);

    double policy_loss = 0.0, value_loss = 0.0, entropy = 0.0;
    long n_minibatches = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
      for (long start = 0; start + config.minibatch <= config.rollout_steps;
           start += config.minibatch) {
        const long mb = config.minibatch;
        Eigen::MatrixXd obs(8, mb), act(3, mb);
        Eigen::VectorXd old_lp(mb), mb_adv(mb), targets(mb);
        for (long k = 0; k < mb; ++k) {
          const long idx = order[static_cast<std::size_t>(start + k)];
          obs.col(k) = batch.observations.col(idx);
          act.col(k) = batch.actions.col(idx);
          old_lp[k] = batch.log_probs[idx];
          mb_adv[k] = adv[idx];
          targets[k] = gae.value_targets[idx];
        }
        // policy step
        nn::NetworkParams mean_grad(res.policy.mean_net.spec());
        Eigen::Vector3d log_std_grad = Eigen::Vector3d::Zero();
        const PpoObjective obj =
            ppo_clip_objective(res.policy, obs, act, old_lp, mb_adv, config.clip_eps,
                               config.entropy_coef, mean_grad, log_std_grad);
        if (!std::isfinite(obj.policy_loss))
          throw DivergenceError("ppo: non-finite policy loss at update " + std::to_string(update));
        nn::clip_global_norm(mean_grad.flat, config.max_grad_norm);
        nn::adam_step(res.policy.mean_net.flat, mean_grad.flat, opt_mean);
        Eigen::VectorXd ls_grad = log_std_grad;
        nn::clip_global_norm(ls_grad, config.max_grad_norm);
        Eigen::VectorXd ls = res.policy.log_std;
        nn::adam_step(ls, ls_grad, opt_log_std);
        res.policy.log_std = ls;
        res.policy.clamp_log_std();

        // value step: 0.5 * mse against the GAE targets
        nn::GradientRecord vrec;
        const Eigen::VectorXd v = res.value.value(obs, &vrec);
        const Eigen::VectorXd verr = v - targets;
        const double vloss = 0.5 * verr.squaredNorm() / static_cast<double>(mb);
        if (!std::isfinite(vloss))
          throw DivergenceError("ppo: non-finite value loss at update " + std::to_string(update));
        nn::NetworkParams vgrad(res.value.net.spec());
        nn::backward(res.value.net, vrec, verr.transpose() / static_cast<double>(mb), vgrad);
        nn::clip_global_norm(vgrad.flat, config.max_grad_norm);
        nn::adam_step(res.value.net.flat, vgrad.flat, opt_value);

        policy_loss += obj.policy_loss;
        value_loss += vloss;
        entropy += obj.entropy;
        ++n_minibatches;
      }
    }

    PpoLogRow row;
    row.update = update;
    row.env_steps = static_cast<long>(update) * config.rollout_steps;
    row.policy_loss = policy_loss / static_cast<double>(n_minibatches);
    row.value_loss = value_loss / static_cast<double>(n_minibatches);
    row.entropy = entropy / static_cast<double>(n_minibatches);

    const bool do_eval = (update % config.eval_interval == 0) || update == config.total_updates;
    if (do_eval) {
      const EvalStats stats = eval_policy(
          res.policy, env, config.eval_episodes, derive_seed(seed, "ppo-eval-" + std::to_string(update)));
      row.mean_return = stats.mean_return;
      row.success_rate = stats.success_rate;
      if (res.best_update < 0 || stats.mean_return > res.best_return) {
        res.best_return = stats.mean_return;
        res.best_success = stats.success_rate;
        res.best_update = update;
        best = res.policy;
      }
      res.log.push_back(row);
      if (stats.success_rate >= config.target_success) break;
    } else {
      res.log.push_back(row);
    }
  }
  res.policy = best;
  return res;
}

void write_ppo_log_csv(const std::vector<PpoLogRow>& log, const std::string& path) {
  std::string out = "update,env_steps,mean_return,success_rate,policy_loss,value_loss,entropy\n";
  for (const auto& r : log) {
    out += std::to_string(r.update) + "," + std::to_string(r.env_steps) + "," +
           format_double(r.mean_return) + "," + format_double(r.success_rate) + "," +
           format_double(r.policy_loss) + "," + format_double(r.value_loss) + "," +
           format_double(r.entropy) + "\n";
  }
  write_text_file(path, out);
}

}  // namespace lander::rl
