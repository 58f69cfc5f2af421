#include "lander/nn/adam.hpp"

#include <cmath>

#include "lander/common/error.hpp"

namespace lander::nn {

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state) {
  if (grad.size() != params.size() || state.m.size() != params.size())
    throw ShapeError("adam_step: size mismatch");
  if (!grad.allFinite()) throw DivergenceError("adam_step: non-finite gradient");
  const auto& c = state.config;
  state.step += 1;
  state.m = c.beta1 * state.m + (1.0 - c.beta1) * grad;
  state.v = c.beta2 * state.v.array().matrix() + (1.0 - c.beta2) * grad.array().square().matrix();
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  params.array() -=
      c.lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + c.eps);
}

double clip_global_norm(Eigen::VectorXd& grad, double max_norm) {
  const double norm = grad.norm();
  if (norm > max_norm && norm > 0.0) grad *= max_norm / norm;
  return norm;
}

}  // namespace lander::nn
