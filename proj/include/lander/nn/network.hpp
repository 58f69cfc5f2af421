#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "lander/common/rng.hpp"

namespace lander::nn {

enum class OutputHead { kPlain, kGaussian };

// Dense MLP shape: widths[0] is the input dim, widths.back() the output dim
// (per head for Gaussian output). Hidden layers apply ReLU, then LayerNorm
// when layer_norm is set. A Gaussian head emits (mean, log-variance) pairs;
// gaussian_heads > 1 puts several independent heads on the shared trunk.
struct NetworkSpec {
  std::vector<int> widths;
  bool layer_norm = false;
  OutputHead head = OutputHead::kPlain;
  int gaussian_heads = 1;

  int input_dim() const { return widths.front(); }
  int output_dim() const { return widths.back(); }
  int num_hidden() const { return static_cast<int>(widths.size()) - 2; }
  void validate() const;
  bool operator==(const NetworkSpec&) const = default;
};

// One named slice of the flat parameter vector, viewed as a rows x cols
// matrix (column-major in memory; serialized row-major by the checkpoint).
struct ParamBlock {
  std::string name;
  int rows = 0;
  int cols = 0;
  long offset = 0;
  long size() const { return static_cast<long>(rows) * cols; }
};

// Parameters (or a same-shaped gradient accumulator) for one network.
// Canonical storage is a single flat vector so Adam, checkpoints and
// finite-difference checks all operate on one buffer.
class NetworkParams {
 public:
  NetworkParams() = default;
  explicit NetworkParams(const NetworkSpec& spec);  // zero-initialized

  // Uniform Kaiming-style fan-in init for weights, zero biases,
  // unit layer-norm gains.
  static NetworkParams init(const NetworkSpec& spec, Rng& rng);

  const NetworkSpec& spec() const { return spec_; }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }
  long size() const { return flat.size(); }

  Eigen::Map<Eigen::MatrixXd> block(int i);
  Eigen::Map<const Eigen::MatrixXd> block(int i) const;
  Eigen::Map<Eigen::MatrixXd> block(const std::string& name);
  Eigen::Map<const Eigen::MatrixXd> block(const std::string& name) const;
  int block_index(const std::string& name) const;

  void set_zero() { flat.setZero(); }

  Eigen::VectorXd flat;

 private:
  NetworkSpec spec_;
  std::vector<ParamBlock> blocks_;
};

// Cached intermediates from one forward pass; backward replays it exactly.
// Batches are column-major: each column is one sample.
struct GradientRecord {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> pre;     // per hidden layer, pre-activation
  std::vector<Eigen::MatrixXd> normed;  // post-LN normalized values (no gain)
  std::vector<Eigen::RowVectorXd> inv_std;
  std::vector<Eigen::MatrixXd> hidden;  // layer outputs fed to the next layer
};

struct ForwardResult {
  Eigen::MatrixXd output;
  GradientRecord rec;
};

struct GaussianForward {
  // One (mu, log_var) pair per head, each output_dim x batch.
  std::vector<Eigen::MatrixXd> mu;
  std::vector<Eigen::MatrixXd> log_var;
  GradientRecord rec;
};

constexpr double kLayerNormEps = 1e-5;

// Forward pass for a plain-head network. Input is input_dim x batch.
ForwardResult forward(const NetworkParams& params, const Eigen::MatrixXd& input);

// Forward pass through the trunk plus every Gaussian head.
GaussianForward forward_gaussian(const NetworkParams& params, const Eigen::MatrixXd& input);

// Reverse-mode gradients. Accumulates parameter gradients into `grad`
// (same spec as `params`) and returns d loss / d input.
Eigen::MatrixXd backward(const NetworkParams& params, const GradientRecord& rec,
                         const Eigen::MatrixXd& d_output, NetworkParams& grad);

Eigen::MatrixXd backward_gaussian(const NetworkParams& params, const GradientRecord& rec,
                                  const std::vector<Eigen::MatrixXd>& d_mu,
                                  const std::vector<Eigen::MatrixXd>& d_log_var,
                                  NetworkParams& grad);

}  // namespace lander::nn
