#include "lander/rl/policy.hpp"

#include <cmath>

#include "lander/common/error.hpp"

namespace lander::rl {

sim::Vector8d default_obs_scale() {
  sim::Vector8d s;
  s << 50.0, 200.0, M_PI / 6.0, 10.0, 20.0, 0.5, 4.0, 1.0;
  return s;
}

Eigen::MatrixXd scale_observations(const Eigen::MatrixXd& obs, const sim::Vector8d& scale) {
  return obs.array().colwise() / scale.array();
}

sim::ControlInput action_to_control(const Eigen::Vector3d& pre_squash,
                                    const sim::VehicleParams& params) {
  const Eigen::Vector3d a = pre_squash.array().tanh();
  return {0.5 * (a[0] + 1.0) * params.u_max[0], a[1] * params.u_max[1], a[2] * params.u_max[2]};
}

Eigen::Vector3d control_to_presquash(const sim::ControlInput& u, const sim::VehicleParams& params) {
  Eigen::Vector3d a;
  a << 2.0 * u.u1 / params.u_max[0] - 1.0, u.u2 / params.u_max[1], u.u3 / params.u_max[2];
  a = a.cwiseMax(-kAtanhClip).cwiseMin(kAtanhClip);
  return a.array().atanh();
}

GaussianPolicy GaussianPolicy::make(const std::vector<int>& hidden, bool layer_norm,
                                    double log_std_init, Rng& rng) {
  nn::NetworkSpec spec;
  spec.widths.push_back(8);
  spec.widths.insert(spec.widths.end(), hidden.begin(), hidden.end());
  spec.widths.push_back(3);
  spec.layer_norm = layer_norm;
  GaussianPolicy p;
  p.mean_net = nn::NetworkParams::init(spec, rng);
  p.log_std.setConstant(log_std_init);
  return p;
}

Eigen::MatrixXd GaussianPolicy::mean(const Eigen::MatrixXd& obs, nn::GradientRecord* rec) const {
  auto res = nn::forward(mean_net, scale_observations(obs, obs_scale));
  if (rec) *rec = std::move(res.rec);
  return std::move(res.output);
}

Eigen::Vector3d GaussianPolicy::act_mean(const sim::Vector8d& obs) const {
  return mean(obs).col(0);
}

Eigen::Vector3d GaussianPolicy::act_sample(const sim::Vector8d& obs, Rng& rng) const {
  const Eigen::Vector3d m = act_mean(obs);
  Eigen::Vector3d eps;
  eps << rng.normal(), rng.normal(), rng.normal();
  return m.array() + log_std.array().exp() * eps.array();
}

Eigen::VectorXd GaussianPolicy::log_prob(const Eigen::MatrixXd& mean,
                                         const Eigen::MatrixXd& actions) const {
  constexpr double kLog2Pi = 1.8378770664093453;
  const Eigen::Array3d var = (2.0 * log_std.array()).exp();
  Eigen::VectorXd lp(actions.cols());
  for (long c = 0; c < actions.cols(); ++c) {
    const Eigen::Array3d d = (actions.col(c) - mean.col(c)).array();
    lp[c] = -0.5 * (kLog2Pi * 3.0 + 2.0 * log_std.sum() + (d.square() / var).sum());
  }
  return lp;
}

double GaussianPolicy::entropy() const {
  constexpr double kHalfLog2PiE = 1.4189385332046727;  // 0.5*ln(2*pi*e)
  return log_std.sum() + 3.0 * kHalfLog2PiE;
}

void GaussianPolicy::clamp_log_std() {
  log_std = log_std.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
}

sim::PolicyFn GaussianPolicy::as_policy_fn(const sim::VehicleParams& params) const {
  return [this, params](const sim::Vector8d& obs) {
    return action_to_control(act_mean(obs), params);
  };
}

sim::PolicyFn GaussianPolicy::as_stochastic_fn(const sim::VehicleParams& params, Rng& rng) const {
  return [this, params, &rng](const sim::Vector8d& obs) {
    return action_to_control(act_sample(obs, rng), params);
  };
}

void GaussianPolicy::save(const std::string& path_prefix, std::uint64_t seed, long step) const {
  nn::CheckpointWriter w;
  w.set_seed(seed);
  w.set_step(step);
  w.add_network("mean_net", mean_net);
  w.add("log_std", Eigen::VectorXd(log_std));
  w.add("obs_scale", Eigen::VectorXd(obs_scale));
  w.write(path_prefix);
}

GaussianPolicy GaussianPolicy::load(const std::string& path_prefix) {
  nn::CheckpointReader r(path_prefix);
  GaussianPolicy p;
  p.mean_net = r.get_network("mean_net");
  p.log_std = r.get_vector("log_std");
  p.obs_scale = r.get_vector("obs_scale");
  return p;
}

ValueNet ValueNet::make(const std::vector<int>& hidden, bool layer_norm, Rng& rng) {
  nn::NetworkSpec spec;
  spec.widths.push_back(8);
  spec.widths.insert(spec.widths.end(), hidden.begin(), hidden.end());
  spec.widths.push_back(1);
  spec.layer_norm = layer_norm;
  ValueNet v;
  v.net = nn::NetworkParams::init(spec, rng);
  return v;
}

Eigen::VectorXd ValueNet::value(const Eigen::MatrixXd& obs, nn::GradientRecord* rec) const {
  auto res = nn::forward(net, scale_observations(obs, obs_scale));
  if (rec) *rec = std::move(res.rec);
  return res.output.row(0).transpose();
}

}  // namespace lander::rl
