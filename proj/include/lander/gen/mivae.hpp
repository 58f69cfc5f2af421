#pragma once

#include "lander/data/dataset.hpp"
#include "lander/gen/mi.hpp"
#include "lander/nn/network.hpp"

namespace lander::gen {

struct MiVaeConfig {
  int latent_dim = 32;                   // per latent variable
  std::vector<int> hidden = {324, 324};  // per coder
  bool layer_norm = true;
  double lambda1 = 1.0;  // KL(q(z1|xi1) || N(0,1))
  double lambda2 = 1.0;  // KL(q(z2|xi2) || N(1,2))
  double lambda4 = 1.0;  // KL(q(z|xi)  || N(0,1))
  double beta = 20.0;    // MI weight, zero during warmup
  int warmup_epochs = 50;
  double ema_decay = 0.99;
  double lr = 1e-3;
  int batch = 32;
  int epochs = 1000;
  // priors (mean, variance)
  double z1_mean = 0.0, z1_var = 1.0;
  double z2_mean = 1.0, z2_var = 2.0;
  double z_mean = 0.0, z_var = 1.0;

  void validate() const;
};

// Split-latent model: encoder1 carries two Gaussian sub-heads on a shared
// trunk (real data -> head 0 / z1, ideal data -> head 1 / z2); encoder2 maps
// either domain to the shared latent z. Decoders consume [domain latent; z].
struct MiVaeModel {
  nn::NetworkParams encoder1;
  nn::NetworkParams encoder2;
  nn::NetworkParams decoder1;  // reconstructs the real domain from [z1, z]
  nn::NetworkParams decoder2;  // reconstructs the ideal domain from [z2, z]
  MiEmaState ema;
  data::NormalizationStats real_stats;
  data::NormalizationStats ideal_stats;
  MiVaeConfig config;

  static MiVaeModel make(const MiVaeConfig& config, Rng& rng);
  void save(const std::string& path_prefix, std::uint64_t seed, long step) const;
  static MiVaeModel load(const std::string& path_prefix);
};

struct MiVaeLossParts {
  double total = 0.0;
  double recon1 = 0.0;
  double recon2 = 0.0;
  double kl1 = 0.0;
  double kl2 = 0.0;
  double klz = 0.0;
  double mi = 0.0;
};

struct MiVaeGrads {
  nn::NetworkParams encoder1, encoder2, decoder1, decoder2;
  explicit MiVaeGrads(const MiVaeModel& m)
      : encoder1(m.encoder1.spec()),
        encoder2(m.encoder2.spec()),
        decoder1(m.decoder1.spec()),
        decoder2(m.decoder2.spec()) {}
};

// Frozen reparameterization noise for one loss evaluation.
struct MiVaeNoise {
  Eigen::MatrixXd z1, z2, z_real, z_ideal;
  static MiVaeNoise sample(int latent_dim, long batch, Rng& rng);
};

// Loss over equal-size standardized batches from the two domains. All terms
// enter positively (minimized); `beta` should already be zero during warmup.
// The MI estimate blends against `model.ema` without mutating it; the
// returned estimate must be committed by the caller after the update step.
MiVaeLossParts mivae_loss(const MiVaeModel& model, const Eigen::MatrixXd& real_batch,
                          const Eigen::MatrixXd& ideal_batch, double beta,
                          const MiVaeNoise& noise, MiVaeGrads* grads, MiEstimate* mi_out);

struct MiVaeTrainResult {
  MiVaeModel model;
  std::vector<MiVaeLossParts> curve;  // per epoch
};

MiVaeTrainResult train_mivae(const data::Dataset& real, const data::Dataset& ideal,
                             const MiVaeConfig& config, std::uint64_t seed);

// Posterior-anchored generation: one z1 sample per real datum, one shared-z
// sample per datum in real+ideal, decode n distinct (z1, z) pairs drawn
// without replacement from the full cross product.
data::Dataset mivae_generate(const MiVaeModel& model, const data::Dataset& real,
                             const data::Dataset& ideal, long n, std::uint64_t seed,
                             const std::string& recipe);

}  // namespace lander::gen
