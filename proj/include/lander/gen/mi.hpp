#pragma once

#include <Eigen/Dense>

namespace lander::gen {

constexpr double kMiRidge = 1e-6;

// Gaussian mutual information between the first d1 coordinates and the rest,
// 0.5*ln(det(S11)*det(S22)/det(S)), computed on the ridge-regularized joint
// covariance via Cholesky. Throws EstimatorError if not positive definite
// after regularization.
double gaussian_mi(const Eigen::MatrixXd& joint_cov, int d1, double ridge = kMiRidge);

// Running second-moment state for the minibatch MI estimator: EMA of the
// joint covariance of (z1, z2) and of the joint mean, decay 0.99.
struct MiEmaState {
  Eigen::MatrixXd cov;   // (d1+d2) x (d1+d2)
  Eigen::VectorXd mean;  // d1+d2
  double decay = 0.99;
  long count = 0;

  static MiEmaState make(int dim, double decay = 0.99);
};

struct MiEstimate {
  double mi = 0.0;
  // d mi / d z1 and z2 batch entries (through the current batch covariance
  // only; the EMA history is treated as a constant).
  Eigen::MatrixXd d_z1;
  Eigen::MatrixXd d_z2;
  // blend produced by this batch, to be committed after the optimizer step
  Eigen::MatrixXd blended_cov;
  Eigen::VectorXd blended_mean;
};

// Estimates MI on decay*state.cov + (1-decay)*cov(batch) without mutating
// the state; z1/z2 are (dim x batch) with equal batch sizes >= 2.
MiEstimate mi_estimate(const Eigen::MatrixXd& z1, const Eigen::MatrixXd& z2,
                       const MiEmaState& state, double ridge = kMiRidge);

// Writes the blend of a previously computed estimate into the state.
void mi_commit(MiEmaState& state, const MiEstimate& estimate);

}  // namespace lander::gen
