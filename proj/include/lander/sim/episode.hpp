#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lander/sim/lander.hpp"

namespace lander::sim {

enum class Termination { kTouchdown, kTimeout };

// One simulated episode: states[0..n], one control and one reward per step,
// constant wind, times on the fixed dt grid.
struct Trajectory {
  std::vector<double> times;
  std::vector<LanderState> states;
  std::vector<ControlInput> controls;
  std::vector<double> rewards;
  WindVector wind;
  std::string params_id;
  Termination terminated_by = Termination::kTimeout;
  bool success = false;

  double duration() const { return times.empty() ? 0.0 : times.back(); }
  void check() const;  // structural invariants
};

// Environment bundle used by episode simulation, RL training and evaluation.
struct EnvConfig {
  VehicleParams params;
  std::string params_id = "PA";
  StateBounds bounds = StateBounds::defaults();
  RewardConfig reward;
  long max_steps = 2000;
  bool wind_enabled = true;  // false pins wind to (0,0)

  static EnvConfig preset(const std::string& params_id, bool wind_enabled);
};

// Maps the 8-dim observation (x1..x6, wx, wy) to thrusts in newtons.
using PolicyFn = std::function<ControlInput(const Vector8d&)>;

Vector8d make_observation(const LanderState& state, const WindVector& wind);

// Rolls out the policy with zero-order-hold controls until touchdown or
// timeout, recording per-step rewards in the configured mode. Actions are
// clamped to the thrust limits before integration. Throws on non-finite
// policy output or integration failure (with the step index).
Trajectory simulate_episode(const PolicyFn& policy, const LanderState& init,
                            const WindVector& wind, const EnvConfig& env);

}  // namespace lander::sim
