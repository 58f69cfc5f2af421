#include "lander/rl/gae.hpp"

#include <cmath>

#include "lander/common/error.hpp"

namespace lander::rl {

void RolloutBatch::check() const {
  const long n = rewards.size();
  if (observations.cols() != n || actions.cols() != n || log_probs.size() != n ||
      values.size() != n || static_cast<long>(terminal.size()) != n ||
      static_cast<long>(truncated.size()) != n || bootstrap_values.size() != n)
    throw ShapeError("rollout batch: inconsistent lengths");
  if (!rewards.allFinite()) throw ShapeError("rollout batch: non-finite rewards");
}

GaeResult compute_gae(const RolloutBatch& batch, double gamma, double lambda) {
  batch.check();
  const long n = batch.size();
  GaeResult res;
  res.advantages.resize(n);
  double last_gae = 0.0;
  for (long t = n - 1; t >= 0; --t) {
    double delta;
    if (batch.terminal[static_cast<std::size_t>(t)]) {
      delta = batch.rewards[t] - batch.values[t];
      last_gae = delta;
    } else if (batch.truncated[static_cast<std::size_t>(t)]) {
      delta = batch.rewards[t] + gamma * batch.bootstrap_values[t] - batch.values[t];
      last_gae = delta;
    } else {
      delta = batch.rewards[t] + gamma * batch.values[t + 1] - batch.values[t];
      last_gae = delta + gamma * lambda * last_gae;
    }
    res.advantages[t] = last_gae;
  }
  res.value_targets = res.advantages + batch.values;
  return res;
}

void normalize_advantages(Eigen::VectorXd& advantages) {
  const long n = advantages.size();
  if (n == 0) return;
  const double mean = advantages.mean();
  const double var = (advantages.array() - mean).square().sum() / static_cast<double>(n);
  advantages = (advantages.array() - mean) / std::sqrt(var + 1e-8);
}

}  // namespace lander::rl
