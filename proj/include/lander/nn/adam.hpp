#pragma once

#include <Eigen/Dense>

namespace lander::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over one flat parameter vector.
struct AdamState {
  explicit AdamState(long n, AdamConfig cfg = {})
      : config(cfg), m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
  AdamConfig config;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;
};

// Applies one update in place. Throws DivergenceError on non-finite gradients.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state);

// Scales grad down to the given global L2 norm if it exceeds it.
// Returns the pre-clip norm.
double clip_global_norm(Eigen::VectorXd& grad, double max_norm);

}  // namespace lander::nn
