#pragma once

#include <Eigen/Dense>

#include "lander/common/rng.hpp"

namespace lander::nn {

// Reparameterized sample z = mu + exp(0.5 * log_var) .* eps, eps ~ N(0, I).
// eps is kept so gradients can flow back: dz/dmu = 1, dz/dlog_var = 0.5*(z-mu).
struct GaussianSample {
  Eigen::MatrixXd z;
  Eigen::MatrixXd eps;
};

GaussianSample sample_gaussian(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& log_var,
                               Rng& rng);

// Diagonal-Gaussian log density of z, summed over dims, one value per column.
Eigen::RowVectorXd diag_gaussian_log_prob(const Eigen::MatrixXd& z, const Eigen::MatrixXd& mu,
                                          const Eigen::MatrixXd& log_var);

// KL( N(mu1, var1) || N(mu2, var2) ) for diagonal Gaussians, summed over dims.
// Throws on non-positive variances.
double kl_diag_gaussian(const Eigen::VectorXd& mu1, const Eigen::VectorXd& var1,
                        const Eigen::VectorXd& mu2, const Eigen::VectorXd& var2);

// Batched KL against a fixed scalar prior N(prior_mean, prior_var), one value
// per column; inputs parameterized by log-variance as the encoder emits them.
Eigen::RowVectorXd kl_to_prior(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& log_var,
                               double prior_mean, double prior_var);

// Gradients of kl_to_prior w.r.t. mu and log_var (per element).
void kl_to_prior_backward(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& log_var,
                          double prior_mean, double prior_var, double upstream,
                          Eigen::MatrixXd& d_mu, Eigen::MatrixXd& d_log_var);

}  // namespace lander::nn
