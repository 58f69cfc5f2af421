#include "lander/gen/mi.hpp"

#include <cmath>

#include "lander/common/error.hpp"

namespace lander::gen {

namespace {

// log det via Cholesky; throws if the matrix is not positive definite.
double log_det_pd(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw EstimatorError(std::string("mi estimator: covariance not positive definite (") + what +
                         ")");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

Eigen::MatrixXd inverse_pd(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw EstimatorError(std::string("mi estimator: covariance not positive definite (") + what +
                         ")");
  return llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
}

}  // namespace

double gaussian_mi(const Eigen::MatrixXd& joint_cov, int d1, double ridge) {
  const int d = static_cast<int>(joint_cov.rows());
  if (joint_cov.cols() != d || d1 <= 0 || d1 >= d)
    throw ShapeError("gaussian_mi: bad covariance shape or split");
  Eigen::MatrixXd s = joint_cov + ridge * Eigen::MatrixXd::Identity(d, d);
  const double ld_joint = log_det_pd(s, "joint");
  const double ld_1 = log_det_pd(s.topLeftCorner(d1, d1), "block 1");
  const double ld_2 = log_det_pd(s.bottomRightCorner(d - d1, d - d1), "block 2");
  return 0.5 * (ld_1 + ld_2 - ld_joint);
}

MiEmaState MiEmaState::make(int dim, double decay) {
  MiEmaState s;
  s.cov = Eigen::MatrixXd::Zero(dim, dim);
  s.mean = Eigen::VectorXd::Zero(dim);
  s.decay = decay;
  return s;
}

MiEstimate mi_estimate(const Eigen::MatrixXd& z1, const Eigen::MatrixXd& z2,
                       const MiEmaState& state, double ridge) {
  const long m = z1.cols();
  if (z2.cols() != m || m < 2) throw ShapeError("mi_estimate: need equal batch sizes >= 2");
  const int d1 = static_cast<int>(z1.rows());
  const int d2 = static_cast<int>(z2.rows());
  const int d = d1 + d2;
  if (state.cov.rows() != d) throw ShapeError("mi_estimate: state dimension mismatch");

  Eigen::MatrixXd w(d, m);
  w.topRows(d1) = z1;
  w.bottomRows(d2) = z2;
  const Eigen::VectorXd mean = w.rowwise().mean();
  Eigen::MatrixXd centered = w.colwise() - mean;
  const Eigen::MatrixXd batch_cov = centered * centered.transpose() / static_cast<double>(m);

  MiEstimate est;
  est.blended_cov = state.decay * state.cov + (1.0 - state.decay) * batch_cov;
  est.blended_mean = state.decay * state.mean + (1.0 - state.decay) * mean;

  Eigen::MatrixXd s = est.blended_cov + ridge * Eigen::MatrixXd::Identity(d, d);
  est.mi = 0.5 * (log_det_pd(s.topLeftCorner(d1, d1), "block 1") +
                  log_det_pd(s.bottomRightCorner(d2, d2), "block 2") - log_det_pd(s, "joint"));

  // d mi / d S, then chain through the batch-covariance contribution only.
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(d, d);
  g.topLeftCorner(d1, d1) = inverse_pd(s.topLeftCorner(d1, d1), "block 1");
  g.bottomRightCorner(d2, d2) = inverse_pd(s.bottomRightCorner(d2, d2), "block 2");
  g = 0.5 * (g - inverse_pd(s, "joint"));
  const Eigen::MatrixXd d_w =
      (1.0 - state.decay) * (2.0 / static_cast<double>(m)) * (g * centered);
  est.d_z1 = d_w.topRows(d1);
  est.d_z2 = d_w.bottomRows(d2);
  return est;
}

void mi_commit(MiEmaState& state, const MiEstimate& estimate) {
  state.cov = estimate.blended_cov;
  state.mean = estimate.blended_mean;
  state.count += 1;
}

}  // namespace lander::gen
