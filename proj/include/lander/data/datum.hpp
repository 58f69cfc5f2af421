#pragma once

#include <Eigen/Dense>

#include "lander/sim/episode.hpp"

namespace lander::data {

// Fixed-length flattened episode encoding:
//   [ states node-major: t0 x1..x6, t1 x1..x6, ... t99 ]   600 features
//   [ controls node-major: t0 u1..u3, ... t99 ]            300 features
//   [ wx, wy, T_f ]                                          3 features
constexpr int kNodes = 100;
constexpr int kStateDim = 6;
constexpr int kControlDim = 3;
constexpr int kDatumLen = kNodes * (kStateDim + kControlDim) + 3;  // 903
constexpr int kWindXIndex = 900;
constexpr int kWindYIndex = 901;
constexpr int kDurationIndex = 902;

struct ResampledTrajectory {
  Eigen::MatrixXd states;    // kNodes x 6
  Eigen::MatrixXd controls;  // kNodes x 3
  double t_final = 0.0;
};

// Resamples an episode onto kNodes uniformly spaced times over [0, T_f] with
// per-channel linear interpolation; endpoints are preserved exactly. The
// control signal is indexed by the time each control was applied, with the
// final node holding the last applied control.
ResampledTrajectory resample_fixed_length(const sim::Trajectory& traj, int nodes = kNodes);

// Piecewise-linear interpolation helper shared with the re-integration
// evaluator: xs strictly increasing, query clamped to [xs.front, xs.back].
double interp_linear(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys, double x);

Eigen::VectorXd pack_datum(const ResampledTrajectory& resampled, const sim::WindVector& wind);

struct UnpackedDatum {
  Eigen::MatrixXd states;    // kNodes x 6
  Eigen::MatrixXd controls;  // kNodes x 3
  sim::WindVector wind;
  double t_final = 0.0;
};

UnpackedDatum unpack_datum(const Eigen::VectorXd& datum);

Eigen::VectorXd datum_from_trajectory(const sim::Trajectory& traj);

}  // namespace lander::data
