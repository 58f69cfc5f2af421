#pragma once

#include "lander/data/dataset.hpp"
#include "lander/nn/network.hpp"

namespace lander::gen {

struct SvaeConfig {
  int latent_dim = 32;
  std::vector<int> hidden = {324, 324};  // per coder; two hidden layers each
  bool layer_norm = true;
  double lambda = 1.0;  // KL weight
  double lr = 1e-3;
  int batch = 32;
  int epochs = 2000;

  void validate() const;
};

struct SvaeModel {
  nn::NetworkParams encoder;  // feature dim -> hidden -> gaussian(latent)
  nn::NetworkParams decoder;  // latent -> hidden -> feature dim
  data::NormalizationStats stats;  // fit on the training set
  SvaeConfig config;

  static SvaeModel make(const SvaeConfig& config, Rng& rng);
  void save(const std::string& path_prefix, std::uint64_t seed, long step) const;
  static SvaeModel load(const std::string& path_prefix);
};

struct SvaeLossParts {
  double total = 0.0;
  double recon = 0.0;  // mean over batch of ||x - xhat||^2
  double kl = 0.0;     // mean over batch, summed over latent dims
};

// Loss on a standardized batch (features x B) with caller-supplied frozen
// noise (latent x B), so the value is a deterministic function of the
// parameters. Gradients accumulate when the grad pointers are non-null.
SvaeLossParts svae_loss(const SvaeModel& model, const Eigen::MatrixXd& batch, double lambda,
                        const Eigen::MatrixXd& eps, nn::NetworkParams* enc_grad,
                        nn::NetworkParams* dec_grad);

struct SvaeTrainResult {
  SvaeModel model;
  std::vector<SvaeLossParts> curve;  // per epoch
};

SvaeTrainResult train_svae(const data::Dataset& dataset, const SvaeConfig& config,
                           std::uint64_t seed);

// Prior sampling: z ~ N(0, I), decode, de-standardize; duration feature
// clamped to at least two integrator steps.
data::Dataset svae_generate(const SvaeModel& model, long n, std::uint64_t seed,
                            const std::string& recipe);

constexpr double kMinDuration = 0.1;  // 2 * dt for the shipped presets

}  // namespace lander::gen
