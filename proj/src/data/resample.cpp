#include "lander/data/datum.hpp"

#include "lander/common/error.hpp"

namespace lander::data {

double interp_linear(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys, double x) {
  const long n = xs.size();
  if (n == 0 || ys.size() != n) throw ShapeError("interp_linear: bad input sizes");
  if (n == 1 || x <= xs[0]) return ys[0];
  if (x >= xs[n - 1]) return ys[n - 1];
  // binary search for the segment with xs[lo] <= x < xs[lo+1]
  long lo = 0, hi = n - 1;
  while (hi - lo > 1) {
    const long mid = (lo + hi) / 2;
    if (xs[mid] <= x)
      lo = mid;
    else
      hi = mid;
  }
  const double t = (x - xs[lo]) / (xs[lo + 1] - xs[lo]);
  return ys[lo] + t * (ys[lo + 1] - ys[lo]);
}

ResampledTrajectory resample_fixed_length(const sim::Trajectory& traj, int nodes) {
  traj.check();
  const long n = static_cast<long>(traj.states.size());
  if (n < 2) throw ShapeError("resample_fixed_length: trajectory needs >= 2 samples");

  Eigen::VectorXd state_times(n);
  for (long i = 0; i < n; ++i) state_times[i] = traj.times[static_cast<std::size_t>(i)];
  // Controls are sampled at the time they were applied; duplicate the last
  // so the interpolation domain covers [0, T_f].
  Eigen::VectorXd ctrl_times(n);
  ctrl_times.head(n - 1) = state_times.head(n - 1);
  ctrl_times[n - 1] = state_times[n - 1];

  Eigen::MatrixXd state_samples(n, kStateDim);
  for (long i = 0; i < n; ++i) state_samples.row(i) = traj.states[static_cast<std::size_t>(i)].vec().transpose();
  Eigen::MatrixXd ctrl_samples(n, kControlDim);
  for (long i = 0; i < n - 1; ++i) ctrl_samples.row(i) = traj.controls[static_cast<std::size_t>(i)].vec().transpose();
  ctrl_samples.row(n - 1) = ctrl_samples.row(n - 2);

  ResampledTrajectory out;
  out.t_final = traj.duration();
  out.states.resize(nodes, kStateDim);
  out.controls.resize(nodes, kControlDim);
  for (int k = 0; k < nodes; ++k) {
    const double t = (k == nodes - 1)
                         ? out.t_final  // exact endpoint
                         : out.t_final * static_cast<double>(k) / (nodes - 1);
    for (int j = 0; j < kStateDim; ++j)
      out.states(k, j) = interp_linear(state_times, state_samples.col(j), t);
    for (int j = 0; j < kControlDim; ++j)
      out.controls(k, j) = interp_linear(ctrl_times, ctrl_samples.col(j), t);
  }
  // exact endpoint preservation regardless of rounding in the time grid
  out.states.row(0) = state_samples.row(0);
  out.states.row(nodes - 1) = state_samples.row(n - 1);
  out.controls.row(0) = ctrl_samples.row(0);
  out.controls.row(nodes - 1) = ctrl_samples.row(n - 1);
  return out;
}

Eigen::VectorXd pack_datum(const ResampledTrajectory& r, const sim::WindVector& wind) {
  if (r.states.rows() != kNodes || r.states.cols() != kStateDim || r.controls.rows() != kNodes ||
      r.controls.cols() != kControlDim)
    throw ShapeError("pack_datum: wrong resampled shape");
  Eigen::VectorXd d(kDatumLen);
  for (int k = 0; k < kNodes; ++k)
    for (int j = 0; j < kStateDim; ++j) d[k * kStateDim + j] = r.states(k, j);
  const int cbase = kNodes * kStateDim;
  for (int k = 0; k < kNodes; ++k)
    for (int j = 0; j < kControlDim; ++j) d[cbase + k * kControlDim + j] = r.controls(k, j);
  d[kWindXIndex] = wind.wx;
  d[kWindYIndex] = wind.wy;
  d[kDurationIndex] = r.t_final;
  return d;
}

UnpackedDatum unpack_datum(const Eigen::VectorXd& datum) {
  if (datum.size() != kDatumLen)
    throw ShapeError("unpack_datum: expected length " + std::to_string(kDatumLen) + ", got " +
                     std::to_string(datum.size()));
  UnpackedDatum u;
  u.states.resize(kNodes, kStateDim);
  u.controls.resize(kNodes, kControlDim);
  for (int k = 0; k < kNodes; ++k)
    for (int j = 0; j < kStateDim; ++j) u.states(k, j) = datum[k * kStateDim + j];
  const int cbase = kNodes * kStateDim;
  for (int k = 0; k < kNodes; ++k)
    for (int j = 0; j < kControlDim; ++j) u.controls(k, j) = datum[cbase + k * kControlDim + j];
  u.wind.wx = datum[kWindXIndex];
  u.wind.wy = datum[kWindYIndex];
  u.t_final = datum[kDurationIndex];
  return u;
}

Eigen::VectorXd datum_from_trajectory(const sim::Trajectory& traj) {
  return pack_datum(resample_fixed_length(traj), traj.wind);
}

}  // namespace lander::data
