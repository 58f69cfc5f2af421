#pragma once

#include "lander/nn/checkpoint.hpp"
#include "lander/nn/network.hpp"
#include "lander/sim/episode.hpp"

namespace lander::rl {

constexpr double kLogStdMin = -5.0;
constexpr double kLogStdMax = 2.0;

// Fixed per-component observation divisors (initial-bound magnitudes); keeps
// the 8-dim raw observation O(1) for the small policy/value networks.
sim::Vector8d default_obs_scale();

Eigen::MatrixXd scale_observations(const Eigen::MatrixXd& obs, const sim::Vector8d& scale);

// Squash map between the policy's unbounded action space and thrusts:
// u1 = (a1+1)/2 * u1max, u2 = a2 * u2max, u3 = a3 * u3max with a = tanh(pre).
sim::ControlInput action_to_control(const Eigen::Vector3d& pre_squash,
                                    const sim::VehicleParams& params);

// Inverse map for dataset actions; normalized components are clipped to
// +/- kAtanhClip before atanh so cloned targets stay bounded.
constexpr double kAtanhClip = 0.999;
Eigen::Vector3d control_to_presquash(const sim::ControlInput& u, const sim::VehicleParams& params);

// Diagonal-Gaussian policy over pre-squash actions: MLP mean plus a
// state-independent log-std 3-vector (clamped to [kLogStdMin, kLogStdMax]).
struct GaussianPolicy {
  nn::NetworkParams mean_net;
  Eigen::Vector3d log_std = Eigen::Vector3d::Zero();
  sim::Vector8d obs_scale = default_obs_scale();

  static GaussianPolicy make(const std::vector<int>& hidden, bool layer_norm, double log_std_init,
                             Rng& rng);

  // Batched mean over raw observations (8 x n); optionally records the pass.
  Eigen::MatrixXd mean(const Eigen::MatrixXd& obs, nn::GradientRecord* rec = nullptr) const;

  Eigen::Vector3d act_mean(const sim::Vector8d& obs) const;
  Eigen::Vector3d act_sample(const sim::Vector8d& obs, Rng& rng) const;

  // Log density of pre-squash actions under the current parameters.
  Eigen::VectorXd log_prob(const Eigen::MatrixXd& mean, const Eigen::MatrixXd& actions) const;
  double entropy() const;  // state-independent for a diagonal Gaussian

  void clamp_log_std();
  sim::PolicyFn as_policy_fn(const sim::VehicleParams& params) const;       // deterministic
  sim::PolicyFn as_stochastic_fn(const sim::VehicleParams& params, Rng& rng) const;

  void save(const std::string& path_prefix, std::uint64_t seed, long step) const;
  static GaussianPolicy load(const std::string& path_prefix);
};

// Scalar MLP over the scaled observation.
struct ValueNet {
  nn::NetworkParams net;
  sim::Vector8d obs_scale = default_obs_scale();

  static ValueNet make(const std::vector<int>& hidden, bool layer_norm, Rng& rng);
  Eigen::VectorXd value(const Eigen::MatrixXd& obs, nn::GradientRecord* rec = nullptr) const;
};

}  // namespace lander::rl
