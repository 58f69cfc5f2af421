#pragma once

#include <cstdint>

#include "lander/data/dataset.hpp"
#include "lander/rl/policy.hpp"

namespace lander::offline {

// Step tuples unpacked from fixed-length datums. Each datum contributes
// kNodes-1 transitions with dt = T_f / (kNodes-1); observations carry the
// datum's wind, rewards are recomputed with the offline-mode reward on the
// stored next state, and the trajectory tail is flagged done.
struct TransitionDataset {
  Eigen::MatrixXd observations;       // 8 x n
  Eigen::MatrixXd next_observations;  // 8 x n
  Eigen::MatrixXd actions_presquash;  // 3 x n (for likelihoods)
  Eigen::MatrixXd actions_squashed;   // 3 x n in [-1, 1] (for Q inputs)
  Eigen::MatrixXd next_actions_squashed;  // 3 x n; tail column repeats its own action
  Eigen::VectorXd rewards;
  std::vector<std::uint8_t> done;
  Eigen::VectorXd dt;                 // per transition (constant per trajectory)
  std::vector<long> trajectory_starts;
  data::DatasetManifest source;

  long size() const { return rewards.size(); }
  void check() const;
  std::uint64_t content_hash() const;
};

TransitionDataset to_transitions(const data::Dataset& dataset, const sim::VehicleParams& params);

}  // namespace lander::offline
