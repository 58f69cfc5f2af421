#include "lander/nn/network.hpp"

#include <cmath>

#include "lander/common/error.hpp"

namespace lander::nn {

void NetworkSpec::validate() const {
  if (widths.size() < 3) throw ShapeError("network needs at least one hidden layer");
  for (int w : widths)
    if (w <= 0) throw ShapeError("layer widths must be positive");
  if (head == OutputHead::kPlain && gaussian_heads != 1)
    throw ShapeError("plain-head network cannot have multiple heads");
  if (gaussian_heads < 1) throw ShapeError("gaussian_heads must be >= 1");
}

namespace {

std::vector<ParamBlock> make_layout(const NetworkSpec& spec) {
  spec.validate();
  std::vector<ParamBlock> blocks;
  long offset = 0;
  auto add = [&](const std::string& name, int rows, int cols) {
    blocks.push_back({name, rows, cols, offset});
    offset += static_cast<long>(rows) * cols;
  };
  const int n_hidden = spec.num_hidden();
  for (int k = 0; k < n_hidden; ++k) {
    const std::string idx = std::to_string(k);
    add("layer" + idx + ".W", spec.widths[k + 1], spec.widths[k]);
    add("layer" + idx + ".b", spec.widths[k + 1], 1);
    if (spec.layer_norm) {
      add("ln" + idx + ".gain", spec.widths[k + 1], 1);
      add("ln" + idx + ".offset", spec.widths[k + 1], 1);
    }
  }
  const int last_hidden = spec.widths[n_hidden];
  const int out = spec.output_dim();
  if (spec.head == OutputHead::kPlain) {
    add("out.W", out, last_hidden);
    add("out.b", out, 1);
  } else {
    for (int h = 0; h < spec.gaussian_heads; ++h) {
      const std::string idx = std::to_string(h);
      add("head" + idx + ".mu.W", out, last_hidden);
      add("head" + idx + ".mu.b", out, 1);
      add("head" + idx + ".lv.W", out, last_hidden);
      add("head" + idx + ".lv.b", out, 1);
    }
  }
  return blocks;
}

}  // namespace

NetworkParams::NetworkParams(const NetworkSpec& spec) : spec_(spec) {
  blocks_ = make_layout(spec);
  long total = 0;
  for (const auto& b : blocks_) total += b.size();
  flat = Eigen::VectorXd::Zero(total);
}

NetworkParams NetworkParams::init(const NetworkSpec& spec, Rng& rng) {
  NetworkParams p(spec);
  for (const auto& blk : p.blocks_) {
    auto view = Eigen::Map<Eigen::MatrixXd>(p.flat.data() + blk.offset, blk.rows, blk.cols);
    if (blk.name.find(".W") != std::string::npos) {
      const double bound = std::sqrt(6.0 / blk.cols);  // fan_in = cols
      for (long i = 0; i < view.size(); ++i) view.data()[i] = rng.uniform(-bound, bound);
    } else if (blk.name.find("gain") != std::string::npos) {
      view.setOnes();
    }  // biases and LN offsets stay zero
  }
  return p;
}

Eigen::Map<Eigen::MatrixXd> NetworkParams::block(int i) {
  const auto& b = blocks_[i];
  return {flat.data() + b.offset, b.rows, b.cols};
}

Eigen::Map<const Eigen::MatrixXd> NetworkParams::block(int i) const {
  const auto& b = blocks_[i];
  return {flat.data() + b.offset, b.rows, b.cols};
}

int NetworkParams::block_index(const std::string& name) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    if (blocks_[i].name == name) return static_cast<int>(i);
  throw ShapeError("no parameter block named " + name);
}

Eigen::Map<Eigen::MatrixXd> NetworkParams::block(const std::string& name) {
  return block(block_index(name));
}

Eigen::Map<const Eigen::MatrixXd> NetworkParams::block(const std::string& name) const {
  return block(block_index(name));
}

namespace {

// Runs the hidden stack, filling the record; returns the last hidden output.
const Eigen::MatrixXd& run_trunk(const NetworkParams& params, const Eigen::MatrixXd& input,
                                 GradientRecord& rec) {
  const auto& spec = params.spec();
  if (input.rows() != spec.input_dim())
    throw ShapeError("input dim " + std::to_string(input.rows()) + " != spec " +
                     std::to_string(spec.input_dim()));
  const int n_hidden = spec.num_hidden();
  rec.input = input;
  rec.pre.resize(n_hidden);
  rec.hidden.resize(n_hidden);
  if (spec.layer_norm) {
    rec.normed.resize(n_hidden);
    rec.inv_std.resize(n_hidden);
  }
  const Eigen::MatrixXd* h = &rec.input;
  for (int k = 0; k < n_hidden; ++k) {
    const std::string idx = std::to_string(k);
    auto W = params.block("layer" + idx + ".W");
    auto b = params.block("layer" + idx + ".b");
    rec.pre[k] = (W * (*h)).colwise() + b.col(0);
    Eigen::MatrixXd act = rec.pre[k].cwiseMax(0.0);
    if (spec.layer_norm) {
      auto gain = params.block("ln" + idx + ".gain");
      auto offset = params.block("ln" + idx + ".offset");
      const double dim = static_cast<double>(act.rows());
      Eigen::RowVectorXd mean = act.colwise().sum() / dim;
      Eigen::MatrixXd centered = act.rowwise() - mean;
      Eigen::RowVectorXd var = centered.array().square().colwise().sum() / dim;
      rec.inv_std[k] = (var.array() + kLayerNormEps).rsqrt();
      rec.normed[k] = centered.array().rowwise() * rec.inv_std[k].array();
      rec.hidden[k] =
          (rec.normed[k].array().colwise() * gain.col(0).array()).colwise() + offset.col(0).array();
    } else {
      rec.hidden[k] = std::move(act);
    }
    h = &rec.hidden[k];
  }
  return *h;
}

// Backprop through the hidden stack given d loss / d last-hidden.
Eigen::MatrixXd trunk_backward(const NetworkParams& params, const GradientRecord& rec,
                               Eigen::MatrixXd d_hidden, NetworkParams& grad) {
  const auto& spec = params.spec();
  for (int k = spec.num_hidden() - 1; k >= 0; --k) {
    const std::string idx = std::to_string(k);
    Eigen::MatrixXd d_act;
    if (spec.layer_norm) {
      auto gain = params.block("ln" + idx + ".gain");
      grad.block("ln" + idx + ".gain").col(0) +=
          (d_hidden.array() * rec.normed[k].array()).rowwise().sum().matrix();
      grad.block("ln" + idx + ".offset").col(0) += d_hidden.rowwise().sum();
      // d wrt normalized value, then through the normalization itself.
      Eigen::MatrixXd dn = d_hidden.array().colwise() * gain.col(0).array();
      const double dim = static_cast<double>(dn.rows());
      Eigen::RowVectorXd dn_mean = dn.colwise().sum() / dim;
      Eigen::RowVectorXd dnn_mean =
          (dn.array() * rec.normed[k].array()).colwise().sum() / dim;
      d_act = ((dn.rowwise() - dn_mean).array() -
               rec.normed[k].array().rowwise() * dnn_mean.array())
                  .rowwise() *
              rec.inv_std[k].array();
    } else {
      d_act = std::move(d_hidden);
    }
    // ReLU mask from the recorded pre-activation.
    Eigen::MatrixXd d_pre =
        (rec.pre[k].array() > 0.0).select(d_act, Eigen::MatrixXd::Zero(d_act.rows(), d_act.cols()));
    const Eigen::MatrixXd& below = (k == 0) ? rec.input : rec.hidden[k - 1];
    grad.block("layer" + idx + ".W") += d_pre * below.transpose();
    grad.block("layer" + idx + ".b").col(0) += d_pre.rowwise().sum();
    auto W = params.block("layer" + idx + ".W");
    d_hidden = W.transpose() * d_pre;
  }
  return d_hidden;  // now d input
}

}  // namespace

ForwardResult forward(const NetworkParams& params, const Eigen::MatrixXd& input) {
  if (params.spec().head != OutputHead::kPlain)
    throw ShapeError("forward() requires a plain head");
  ForwardResult res;
  const Eigen::MatrixXd& h = run_trunk(params, input, res.rec);
  auto W = params.block("out.W");
  auto b = params.block("out.b");
  res.output = (W * h).colwise() + b.col(0);
  return res;
}

GaussianForward forward_gaussian(const NetworkParams& params, const Eigen::MatrixXd& input) {
  const auto& spec = params.spec();
  if (spec.head != OutputHead::kGaussian)
    throw ShapeError("forward_gaussian() requires a gaussian head");
  GaussianForward res;
  const Eigen::MatrixXd& h = run_trunk(params, input, res.rec);
  res.mu.resize(spec.gaussian_heads);
  res.log_var.resize(spec.gaussian_heads);
  for (int i = 0; i < spec.gaussian_heads; ++i) {
    const std::string idx = std::to_string(i);
    res.mu[i] = (params.block("head" + idx + ".mu.W") * h).colwise() +
                params.block("head" + idx + ".mu.b").col(0);
    res.log_var[i] = (params.block("head" + idx + ".lv.W") * h).colwise() +
                     params.block("head" + idx + ".lv.b").col(0);
  }
  return res;
}

Eigen::MatrixXd backward(const NetworkParams& params, const GradientRecord& rec,
                         const Eigen::MatrixXd& d_output, NetworkParams& grad) {
  const int n_hidden = params.spec().num_hidden();
  const Eigen::MatrixXd& h = rec.hidden[n_hidden - 1];
  grad.block("out.W") += d_output * h.transpose();
  grad.block("out.b").col(0) += d_output.rowwise().sum();
  Eigen::MatrixXd d_hidden = params.block("out.W").transpose() * d_output;
  return trunk_backward(params, rec, std::move(d_hidden), grad);
}

Eigen::MatrixXd backward_gaussian(const NetworkParams& params, const GradientRecord& rec,
                                  const std::vector<Eigen::MatrixXd>& d_mu,
                                  const std::vector<Eigen::MatrixXd>& d_log_var,
                                  NetworkParams& grad) {
  const auto& spec = params.spec();
  const int n_hidden = spec.num_hidden();
  const Eigen::MatrixXd& h = rec.hidden[n_hidden - 1];
  Eigen::MatrixXd d_hidden = Eigen::MatrixXd::Zero(h.rows(), h.cols());
  for (int i = 0; i < spec.gaussian_heads; ++i) {
    const std::string idx = std::to_string(i);
    if (d_mu[i].size() > 0) {
      grad.block("head" + idx + ".mu.W") += d_mu[i] * h.transpose();
      grad.block("head" + idx + ".mu.b").col(0) += d_mu[i].rowwise().sum();
      d_hidden += params.block("head" + idx + ".mu.W").transpose() * d_mu[i];
    }
    if (d_log_var[i].size() > 0) {
      grad.block("head" + idx + ".lv.W") += d_log_var[i] * h.transpose();
      grad.block("head" + idx + ".lv.b").col(0) += d_log_var[i].rowwise().sum();
      d_hidden += params.block("head" + idx + ".lv.W").transpose() * d_log_var[i];
    }
  }
  return trunk_backward(params, rec, std::move(d_hidden), grad);
}

}  // namespace lander::nn
