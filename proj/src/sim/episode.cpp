#include "lander/sim/episode.hpp"

#include "lander/common/error.hpp"

namespace lander::sim {

void Trajectory::check() const {
  if (states.size() != controls.size() + 1 || states.size() != times.size() ||
      rewards.size() != controls.size())
    throw ShapeError("trajectory: inconsistent lengths");
  if (!times.empty() && times.front() != 0.0) throw ShapeError("trajectory: times[0] != 0");
}

EnvConfig EnvConfig::preset(const std::string& params_id, bool wind) {
  EnvConfig env;
  env.params = params_preset(params_id);
  env.params_id = params_id;
  env.wind_enabled = wind;
  return env;
}

Vector8d make_observation(const LanderState& state, const WindVector& wind) {
  Vector8d obs;
  obs << state.x1, state.x2, state.x3, state.x4, state.x5, state.x6, wind.wx, wind.wy;
  return obs;
}

Trajectory simulate_episode(const PolicyFn& policy, const LanderState& init,
                            const WindVector& wind_in, const EnvConfig& env) {
  const WindVector wind = env.wind_enabled ? wind_in : WindVector{0.0, 0.0};
  Trajectory traj;
  traj.wind = wind;
  traj.params_id = env.params_id;
  traj.times.push_back(0.0);
  traj.states.push_back(init);

  LanderState state = init;
  double prev_s = shaping(state, wind, env.reward.maxima);
  for (long step = 0; step < env.max_steps; ++step) {
    ControlInput raw = policy(make_observation(state, wind));
    if (!raw.finite())
      throw InvalidStateError("simulate_episode: policy emitted non-finite action at step " +
                              std::to_string(step));
    const ControlInput u = raw.clamped(env.params);
    LanderState next;
    try {
      next = rk4_step(state, u, wind, env.params, env.params.dt);
    } catch (const IntegrationError& e) {
      throw IntegrationError("simulate_episode: " + std::string(e.what()), step);
    }
    const double r = reward(prev_s, next, u, wind, env.reward, env.params);
    prev_s = shaping(next, wind, env.reward.maxima);

    traj.controls.push_back(u);
    traj.rewards.push_back(r);
    traj.times.push_back(static_cast<double>(step + 1) * env.params.dt);
    traj.states.push_back(next);
    state = next;

    const TerminalStatus t = terminal_and_success(state, wind, env.bounds, step + 1, env.max_steps);
    if (t.is_terminal) {
      traj.terminated_by = state.x2 < 1.0 ? Termination::kTouchdown : Termination::kTimeout;
      traj.success = t.is_success;
      break;
    }
  }
  return traj;
}

}  // namespace lander::sim
