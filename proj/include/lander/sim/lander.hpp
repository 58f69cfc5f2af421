#pragma once

#include <Eigen/Dense>

#include <array>
#include <string>

#include "lander/common/rng.hpp"

namespace lander::sim {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Vector8d = Eigen::Matrix<double, 8, 1>;

// Vehicle constants in SI units. Named presets carry thrust limits in
// newtons (the published tables list kilonewtons).
struct VehicleParams {
  double mass = 0.0;        // kg
  double gravity = 0.0;     // m/s^2
  double length = 0.0;      // m
  double drag_coeff = 0.0;  // quadratic drag, dimensionless
  double dt = 0.0;          // s
  std::array<double, 3> u_max = {0.0, 0.0, 0.0};  // N

  void validate() const;
};

// Built-in parameter sets: "PA" (true vehicle) and "PB" (estimated vehicle).
VehicleParams params_preset(const std::string& id);

// Planar lander state: positions x1 (horizontal), x2 (altitude), attitude x3,
// air-relative velocities x4, x5, angular rate x6.
struct LanderState {
  double x1 = 0.0, x2 = 0.0, x3 = 0.0, x4 = 0.0, x5 = 0.0, x6 = 0.0;

  Vector6d vec() const {
    Vector6d v;
    v << x1, x2, x3, x4, x5, x6;
    return v;
  }
  static LanderState from_vec(const Vector6d& v) { return {v[0], v[1], v[2], v[3], v[4], v[5]}; }
  bool finite() const;
};

struct WindVector {
  double wx = 0.0, wy = 0.0;
};

// Thrusts in newtons; u1 is the main engine (non-negative), u2/u3 the side
// thrusters (signed).
struct ControlInput {
  double u1 = 0.0, u2 = 0.0, u3 = 0.0;

  Eigen::Vector3d vec() const { return {u1, u2, u3}; }
  ControlInput clamped(const VehicleParams& p) const;
  bool finite() const;
};

// Initial-condition box over (x1..x6, wx, wy) plus touchdown acceptance
// bounds. Final x4/x5 windows shift with the episode wind.
struct StateBounds {
  Vector8d init_lower;
  Vector8d init_upper;
  // Wind-independent part of the touchdown box.
  double final_x1 = 4.0;           // |x1| <= 4
  double final_x2_lo = 0.0;        // x2 in [0, 1]
  double final_x2_hi = 1.0;
  double final_x3 = M_PI / 18.0;   // |x3| <= pi/18
  double final_v_halfwidth = 3.0;  // |x4 + wx| <= 3 and x5 + wy in [-3, 0]

  static StateBounds defaults();
  void validate() const;
  // Touchdown target: x1 = 0, x3 = 0, x4 = -wx, x5 = -wy, x2 below the band.
  Vector6d final_target(const WindVector& wind) const;
};

// Per-state normalization constants for the shaping term.
struct ShapingMaxima {
  double x1 = 50.0;
  double x2 = 200.0;
  double x3 = M_PI / 6.0;
  double x4 = 5.0;
  double x5 = 20.0;
};

enum class RewardMode { kPpo, kBppo };

struct RewardConfig {
  RewardMode mode = RewardMode::kPpo;
  ShapingMaxima maxima;
  // Sign applied to the 0.5*(s^2 - s_prev^2) shaping increment. +1 follows
  // the published formula verbatim; -1 turns the increment into a penalty
  // for moving away from the target (see docs/rewards.md).
  double shaping_sign = 1.0;
};

// Right-hand side of the equations of motion. Control must already be
// clamped. Throws InvalidStateError on non-finite inputs.
Vector6d derivative(const LanderState& state, const ControlInput& control,
                    const WindVector& wind, const VehicleParams& params);

// Classical RK4 update with zero-order-hold control.
LanderState rk4_step(const LanderState& state, const ControlInput& control,
                     const WindVector& wind, const VehicleParams& params, double dt);

// Independent uniform draw of each initial-state component and the episode
// wind (held constant for the whole episode).
std::pair<LanderState, WindVector> sample_initial(const StateBounds& bounds, Rng& rng);

// Dimensionless shaping sum; zero at the touchdown target.
double shaping(const LanderState& state, const WindVector& wind, const ShapingMaxima& maxima);

// Scalar reward for the transition that produced `state`. prev_shaping is
// s(previous state); only the PPO mode uses it.
double reward(double prev_shaping, const LanderState& state, const ControlInput& control,
              const WindVector& wind, const RewardConfig& config, const VehicleParams& params);

struct TerminalStatus {
  bool is_terminal = false;
  bool is_success = false;
};

TerminalStatus terminal_and_success(const LanderState& state, const WindVector& wind,
                                    const StateBounds& bounds, long step_count, long max_steps);

}  // namespace lander::sim
