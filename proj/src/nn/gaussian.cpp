#include "lander/nn/gaussian.hpp"

#include <cmath>

#include "lander/common/error.hpp"

namespace lander::nn {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;  // ln(2*pi)
}

GaussianSample sample_gaussian(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& log_var,
                               Rng& rng) {
  if (!log_var.allFinite()) throw DivergenceError("non-finite log-variance in gaussian head");
  GaussianSample s;
  s.eps.resize(mu.rows(), mu.cols());
  for (long j = 0; j < s.eps.cols(); ++j)
    for (long i = 0; i < s.eps.rows(); ++i) s.eps(i, j) = rng.normal();
  s.z = mu.array() + (0.5 * log_var.array()).exp() * s.eps.array();
  return s;
}

Eigen::RowVectorXd diag_gaussian_log_prob(const Eigen::MatrixXd& z, const Eigen::MatrixXd& mu,
                                          const Eigen::MatrixXd& log_var) {
  Eigen::ArrayXXd diff2 = (z - mu).array().square();
  Eigen::ArrayXXd terms = -0.5 * (kLog2Pi + log_var.array() + diff2 * (-log_var).array().exp());
  return terms.colwise().sum();
}

double kl_diag_gaussian(const Eigen::VectorXd& mu1, const Eigen::VectorXd& var1,
                        const Eigen::VectorXd& mu2, const Eigen::VectorXd& var2) {
  if ((var1.array() <= 0.0).any() || (var2.array() <= 0.0).any())
    throw DivergenceError("kl_diag_gaussian: non-positive variance");
  Eigen::ArrayXd terms = 0.5 * ((var2.array() / var1.array()).log() +
                                (var1.array() + (mu1 - mu2).array().square()) / var2.array() - 1.0);
  return terms.sum();
}

Eigen::RowVectorXd kl_to_prior(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& log_var,
                               double prior_mean, double prior_var) {
  if (prior_var <= 0.0) throw DivergenceError("kl_to_prior: non-positive prior variance");
  Eigen::ArrayXXd var = log_var.array().exp();
  Eigen::ArrayXXd terms = 0.5 * (std::log(prior_var) - log_var.array() +
                                 (var + (mu.array() - prior_mean).square()) / prior_var - 1.0);
  return terms.colwise().sum();
}

void kl_to_prior_backward(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& log_var,
                          double prior_mean, double prior_var, double upstream,
                          Eigen::MatrixXd& d_mu, Eigen::MatrixXd& d_log_var) {
  // d/dmu = (mu - m)/s2 ; d/dlog_var = 0.5*(var/s2 - 1)
  d_mu.array() += upstream * (mu.array() - prior_mean) / prior_var;
  d_log_var.array() += upstream * 0.5 * (log_var.array().exp() / prior_var - 1.0);
}

}  // namespace lander::nn
