#include "lander/offline/transitions.hpp"

#include "lander/common/error.hpp"
#include "lander/common/hash.hpp"

namespace lander::offline {

void TransitionDataset::check() const {
  const long n = size();
  if (observations.cols() != n || next_observations.cols() != n ||
      actions_presquash.cols() != n || actions_squashed.cols() != n ||
      next_actions_squashed.cols() != n || static_cast<long>(done.size()) != n ||
      dt.size() != n)
    throw ShapeError("transition dataset: inconsistent lengths");
  if ((dt.array() <= 0.0).any()) throw ShapeError("transition dataset: non-positive dt");
}

std::uint64_t TransitionDataset::content_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](const Eigen::MatrixXd& m) {
    h = fnv1a64(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()), h);
  };
  mix(observations);
  mix(next_observations);
  mix(actions_presquash);
  mix(rewards);
  if (!done.empty()) h = fnv1a64(done.data(), done.size(), h);
  mix(dt);
  return h;
}

TransitionDataset to_transitions(const data::Dataset& dataset, const sim::VehicleParams& params) {
  dataset.check();
  const long per = data::kNodes - 1;
  const long n = dataset.count() * per;
  TransitionDataset t;
  t.observations.resize(8, n);
  t.next_observations.resize(8, n);
  t.actions_presquash.resize(3, n);
  t.actions_squashed.resize(3, n);
  t.next_actions_squashed.resize(3, n);
  t.rewards.resize(n);
  t.done.assign(static_cast<std::size_t>(n), 0);
  t.dt.resize(n);
  t.source = dataset.manifest;

  sim::RewardConfig reward_cfg;
  reward_cfg.mode = sim::RewardMode::kBppo;

  long col = 0;
  for (long i = 0; i < dataset.count(); ++i) {
    const data::UnpackedDatum u = data::unpack_datum(dataset.features.row(i).transpose());
    const double step_dt = u.t_final / static_cast<double>(per);
    if (!(step_dt > 0.0)) throw ShapeError("to_transitions: datum has non-positive duration");
    t.trajectory_starts.push_back(col);
    for (long k = 0; k < per; ++k, ++col) {
      const sim::LanderState s{u.states(k, 0), u.states(k, 1), u.states(k, 2),
                               u.states(k, 3), u.states(k, 4), u.states(k, 5)};
      const sim::LanderState s_next{u.states(k + 1, 0), u.states(k + 1, 1), u.states(k + 1, 2),
                                    u.states(k + 1, 3), u.states(k + 1, 4), u.states(k + 1, 5)};
      const sim::ControlInput uk{u.controls(k, 0), u.controls(k, 1), u.controls(k, 2)};
      const sim::ControlInput uk_next{u.controls(k + 1, 0), u.controls(k + 1, 1),
                                      u.controls(k + 1, 2)};
      t.observations.col(col) = sim::make_observation(s, u.wind);
      t.next_observations.col(col) = sim::make_observation(s_next, u.wind);
      const Eigen::Vector3d pre = rl::control_to_presquash(uk, params);
      t.actions_presquash.col(col) = pre;
      t.actions_squashed.col(col) = pre.array().tanh();
      t.next_actions_squashed.col(col) =
          rl::control_to_presquash(uk_next, params).array().tanh();
      t.rewards[col] = sim::reward(0.0, s_next, uk, u.wind, reward_cfg, params);
      t.dt[col] = step_dt;
    }
    t.done[static_cast<std::size_t>(col - 1)] = 1;
    // the tail has no successor action; repeat its own squashed action
    t.next_actions_squashed.col(col - 1) = t.actions_squashed.col(col - 1);
  }
  t.check();
  return t;
}

}  // namespace lander::offline
