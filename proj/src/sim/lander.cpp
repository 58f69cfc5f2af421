#include "lander/sim/lander.hpp"

#include <cmath>

#include "lander/common/error.hpp"

namespace lander::sim {

void VehicleParams::validate() const {
  const bool ok = mass > 0.0 && gravity > 0.0 && length > 0.0 && drag_coeff > 0.0 && dt > 0.0 &&
                  u_max[0] > 0.0 && u_max[1] > 0.0 && u_max[2] > 0.0;
  if (!ok) throw ConfigError("vehicle parameters must all be strictly positive");
}

VehicleParams params_preset(const std::string& id) {
  VehicleParams p;
  p.dt = 0.05;
  if (id == "PA") {
    p.mass = 500.0;
    p.gravity = 3.728;
    p.length = 10.0;
    p.drag_coeff = 0.2;
    p.u_max = {15000.0, 2000.0, 2000.0};
  } else if (id == "PB") {
    p.mass = 450.0;
    p.gravity = 3.65;
    p.length = 11.0;
    p.drag_coeff = 0.4;
    p.u_max = {10000.0, 5000.0, 5000.0};
  } else {
    throw ConfigError("unknown parameter preset: " + id + " (expected PA or PB)");
  }
  return p;
}

bool LanderState::finite() const { return vec().allFinite(); }

bool ControlInput::finite() const { return vec().allFinite(); }

ControlInput ControlInput::clamped(const VehicleParams& p) const {
  ControlInput c;
  c.u1 = std::clamp(u1, 0.0, p.u_max[0]);
  c.u2 = std::clamp(u2, -p.u_max[1], p.u_max[1]);
  c.u3 = std::clamp(u3, -p.u_max[2], p.u_max[2]);
  return c;
}

StateBounds StateBounds::defaults() {
  StateBounds b;
  b.init_lower << -50.0, 150.0, -M_PI / 6.0, -5.0, -20.0, -0.5, -4.0, -1.0;
  b.init_upper << 50.0, 200.0, M_PI / 6.0, 5.0, -2.5, 0.5, 4.0, 1.0;
  return b;
}

void StateBounds::validate() const {
  if ((init_lower.array() > init_upper.array()).any())
    throw ConfigError("initial-state bounds: lower > upper");
  if (final_x1 < 0.0 || final_x3 < 0.0 || final_v_halfwidth < 0.0 || final_x2_hi < final_x2_lo)
    throw ConfigError("final-state bounds malformed");
}

Vector6d StateBounds::final_target(const WindVector& wind) const {
  Vector6d t;
  t << 0.0, 0.5 * (final_x2_lo + final_x2_hi), 0.0, -wind.wx, -wind.wy, 0.0;
  return t;
}

Vector6d derivative(const LanderState& state, const ControlInput& control,
                    const WindVector& wind, const VehicleParams& params) {
  if (!state.finite() || !control.finite() || !std::isfinite(wind.wx) || !std::isfinite(wind.wy))
    throw InvalidStateError("derivative: non-finite input");
  const double m = params.mass;
  const double sin3 = std::sin(state.x3);
  const double cos3 = std::cos(state.x3);
  const double speed = std::sqrt(state.x4 * state.x4 + state.x5 * state.x5);
  const double side = control.u2 + control.u3;
  Vector6d d;
  d[0] = state.x4 + wind.wx;
  d[1] = state.x5 + wind.wy;
  d[2] = state.x6;
  d[3] = (-control.u1 * sin3 + side * cos3 - params.drag_coeff * state.x4 * speed) / m;
  d[4] = (-m * params.gravity + control.u1 * cos3 + side * sin3 -
          params.drag_coeff * state.x5 * speed) /
         m;
  d[5] = 3.0 * (control.u2 - control.u3) / (2.0 * m * params.length);
  return d;
}

LanderState rk4_step(const LanderState& state, const ControlInput& control,
                     const WindVector& wind, const VehicleParams& params, double dt) {
  if (dt <= 0.0) throw ConfigError("rk4_step: dt must be positive");
  const Vector6d x0 = state.vec();
  const Vector6d k1 = derivative(state, control, wind, params);
  const Vector6d k2 = derivative(LanderState::from_vec(x0 + 0.5 * dt * k1), control, wind, params);
  const Vector6d k3 = derivative(LanderState::from_vec(x0 + 0.5 * dt * k2), control, wind, params);
  const Vector6d k4 = derivative(LanderState::from_vec(x0 + dt * k3), control, wind, params);
  const Vector6d x1 = x0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!x1.allFinite()) throw IntegrationError("rk4_step: non-finite update", 0);
  return LanderState::from_vec(x1);
}

std::pair<LanderState, WindVector> sample_initial(const StateBounds& bounds, Rng& rng) {
  Vector8d draw;
  for (int i = 0; i < 8; ++i) draw[i] = rng.uniform(bounds.init_lower[i], bounds.init_upper[i]);
  LanderState s{draw[0], draw[1], draw[2], draw[3], draw[4], draw[5]};
  WindVector w{draw[6], draw[7]};
  return {s, w};
}

double shaping(const LanderState& state, const WindVector& wind, const ShapingMaxima& maxima) {
  return state.x1 / maxima.x1 + state.x2 / maxima.x2 + state.x3 / maxima.x3 +
         (state.x4 + wind.wx) / maxima.x4 + (state.x5 + wind.wy) / maxima.x5;
}

double reward(double prev_shaping, const LanderState& state, const ControlInput& control,
              const WindVector& wind, const RewardConfig& config, const VehicleParams& params) {
  const bool touchdown = state.x2 < 1.0;
  const double deg_per_rad = 180.0 / M_PI;
  switch (config.mode) {
    case RewardMode::kPpo: {
      const double s = shaping(state, wind, config.maxima);
      double r = config.shaping_sign * 0.5 * (s * s - prev_shaping * prev_shaping);
      r -= 0.1 * (std::abs(control.u1) / params.u_max[0] + std::abs(control.u2) / params.u_max[1] +
                  std::abs(control.u3) / params.u_max[2]);
      if (touchdown)
        r += 100.0 - 2.0 * std::abs(state.x1) - deg_per_rad * std::abs(state.x3) -
             5.0 * std::abs(state.x4 + wind.wx) - 10.0 * std::abs(state.x5 + wind.wy);
      return r;
    }
    case RewardMode::kBppo: {
      double r = -0.1 * (std::abs(control.u1) + std::abs(control.u2) + std::abs(control.u3)) / 1e3;
      if (touchdown)
        r += 100.0 - std::abs(state.x1) - deg_per_rad * std::abs(state.x3) -
             std::abs(state.x4 + wind.wx) - std::abs(state.x5 + wind.wy);
      return r;
    }
  }
  throw ConfigError("reward: unknown mode");
}

TerminalStatus terminal_and_success(const LanderState& state, const WindVector& wind,
                                    const StateBounds& bounds, long step_count, long max_steps) {
  TerminalStatus t;
  const bool touchdown = state.x2 < 1.0;
  t.is_terminal = touchdown || step_count >= max_steps;
  if (touchdown) {
    t.is_success = std::abs(state.x1) <= bounds.final_x1 &&
                   state.x2 >= bounds.final_x2_lo && state.x2 <= bounds.final_x2_hi &&
                   std::abs(state.x3) <= bounds.final_x3 &&
                   std::abs(state.x4 + wind.wx) <= bounds.final_v_halfwidth &&
                   state.x5 + wind.wy >= -bounds.final_v_halfwidth && state.x5 + wind.wy <= 0.0;
  }
  return t;
}

}  // namespace lander::sim
