#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace lander::rl {

// On-policy experience for one update: n transitions in collection order.
// `terminal` marks true environment termination (touchdown or timeout);
// `truncated` marks a rollout cut mid-episode, where bootstrap_value holds
// V(next state).
struct RolloutBatch {
  Eigen::MatrixXd observations;  // 8 x n
  Eigen::MatrixXd actions;       // 3 x n, pre-squash
  Eigen::VectorXd log_probs;
  Eigen::VectorXd rewards;
  Eigen::VectorXd values;
  std::vector<std::uint8_t> terminal;
  std::vector<std::uint8_t> truncated;
  Eigen::VectorXd bootstrap_values;
  std::vector<long> episode_starts;

  long size() const { return rewards.size(); }
  void check() const;
};

struct GaeResult {
  Eigen::VectorXd advantages;     // raw GAE(lambda)
  Eigen::VectorXd value_targets;  // advantages + values
};

GaeResult compute_gae(const RolloutBatch& batch, double gamma, double lambda);

// In-place shift/scale to zero mean, unit variance.
void normalize_advantages(Eigen::VectorXd& advantages);

}  // namespace lander::rl
