#include "lander/gen/svae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lander/common/error.hpp"
#include "lander/nn/adam.hpp"
#include "lander/nn/checkpoint.hpp"
#include "lander/nn/gaussian.hpp"

namespace lander::gen {

void SvaeConfig::validate() const {
  if (latent_dim <= 0 || batch <= 0 || epochs <= 0) throw ConfigError("svae: sizes must be positive");
  if (lambda < 0.0) throw ConfigError("svae: lambda must be >= 0");
}

SvaeModel SvaeModel::make(const SvaeConfig& config, Rng& rng) {
  config.validate();
  nn::NetworkSpec enc;
  enc.widths.push_back(data::kDatumLen);
  enc.widths.insert(enc.widths.end(), config.hidden.begin(), config.hidden.end());
  enc.widths.push_back(config.latent_dim);
  enc.layer_norm = config.layer_norm;
  enc.head = nn::OutputHead::kGaussian;

  nn::NetworkSpec dec;
  dec.widths.push_back(config.latent_dim);
  dec.widths.insert(dec.widths.end(), config.hidden.begin(), config.hidden.end());
  dec.widths.push_back(data::kDatumLen);
  dec.layer_norm = config.layer_norm;

  SvaeModel m;
  m.encoder = nn::NetworkParams::init(enc, rng);
  m.decoder = nn::NetworkParams::init(dec, rng);
  m.config = config;
  return m;
}

SvaeLossParts svae_loss(const SvaeModel& model, const Eigen::MatrixXd& batch, double lambda,
                        const Eigen::MatrixXd& eps, nn::NetworkParams* enc_grad,
                        nn::NetworkParams* dec_grad) {
  const long b = batch.cols();
  if (b == 0) throw ShapeError("svae_loss: empty batch");
  auto enc = nn::forward_gaussian(model.encoder, batch);
  const Eigen::MatrixXd& mu = enc.mu[0];
  const Eigen::MatrixXd& lv = enc.log_var[0];
  const Eigen::MatrixXd sigma = (0.5 * lv.array()).exp();
  const Eigen::MatrixXd z = mu.array() + sigma.array() * eps.array();
  auto dec = nn::forward(model.decoder, z);

  SvaeLossParts parts;
  parts.recon = (batch - dec.output).squaredNorm() / static_cast<double>(b);
  parts.kl = nn::kl_to_prior(mu, lv, 0.0, 1.0).sum() / static_cast<double>(b);
  parts.total = parts.recon + lambda * parts.kl;
  if (!std::isfinite(parts.total)) throw DivergenceError("svae_loss: non-finite loss");

  if (enc_grad && dec_grad) {
    const double inv_b = 1.0 / static_cast<double>(b);
    Eigen::MatrixXd d_xhat = 2.0 * inv_b * (dec.output - batch);
    Eigen::MatrixXd d_z = nn::backward(model.decoder, dec.rec, d_xhat, *dec_grad);
    Eigen::MatrixXd d_mu = d_z;
    Eigen::MatrixXd d_lv = (0.5 * (z - mu).array() * d_z.array()).matrix();
    nn::kl_to_prior_backward(mu, lv, 0.0, 1.0, lambda * inv_b, d_mu, d_lv);
    nn::backward_gaussian(model.encoder, enc.rec, {d_mu}, {d_lv}, *enc_grad);
  }
  return parts;
}

SvaeTrainResult train_svae(const data::Dataset& dataset, const SvaeConfig& config,
                           std::uint64_t seed) {
  dataset.check();
  Rng init_rng(derive_seed(seed, "svae-init"));
  Rng noise_rng(derive_seed(seed, "svae-noise"));
  Rng shuffle_rng(derive_seed(seed, "svae-shuffle"));

  SvaeTrainResult res;
  res.model = SvaeModel::make(config, init_rng);
  res.model.stats = data::NormalizationStats::fit(dataset.features);
  const Eigen::MatrixXd x = res.model.stats.apply(dataset.features).transpose();  // features x N
  const long n = x.cols();

  nn::AdamConfig adam_cfg;
  adam_cfg.lr = config.lr;
  nn::AdamState opt_enc(res.model.encoder.size(), adam_cfg);
  nn::AdamState opt_dec(res.model.decoder.size(), adam_cfg);

  std::vector<long> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
    SvaeLossParts epoch_parts;
    long batches = 0;
    for (long start = 0; start < n; start += config.batch) {
      const long b = std::min<long>(config.batch, n - start);
      Eigen::MatrixXd batch(data::kDatumLen, b);
      for (long k = 0; k < b; ++k) batch.col(k) = x.col(order[static_cast<std::size_t>(start + k)]);
      Eigen::MatrixXd eps(config.latent_dim, b);
      for (long i = 0; i < eps.size(); ++i) eps.data()[i] = noise_rng.normal();

      nn::NetworkParams enc_grad(res.model.encoder.spec());
      nn::NetworkParams dec_grad(res.model.decoder.spec());
      SvaeLossParts parts =
          svae_loss(res.model, batch, config.lambda, eps, &enc_grad, &dec_grad);
      nn::adam_step(res.model.encoder.flat, enc_grad.flat, opt_enc);
      nn::adam_step(res.model.decoder.flat, dec_grad.flat, opt_dec);

      epoch_parts.total += parts.total;
      epoch_parts.recon += parts.recon;
      epoch_parts.kl += parts.kl;
      ++batches;
    }
    epoch_parts.total /= static_cast<double>(batches);
    epoch_parts.recon /= static_cast<double>(batches);
    epoch_parts.kl /= static_cast<double>(batches);
    res.curve.push_back(epoch_parts);
  }
  return res;
}

data::Dataset svae_generate(const SvaeModel& model, long n, std::uint64_t seed,
                            const std::string& recipe) {
  Rng rng(derive_seed(seed, "svae-generate"));
  data::Dataset out;
  out.features.resize(n, data::kDatumLen);
  const long chunk = 256;
  for (long start = 0; start < n; start += chunk) {
    const long b = std::min(chunk, n - start);
    Eigen::MatrixXd z(model.config.latent_dim, b);
    for (long i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
    const Eigen::MatrixXd decoded = nn::forward(model.decoder, z).output;
    out.features.middleRows(start, b) = model.stats.invert(decoded.transpose());
  }
  out.features.col(data::kDurationIndex) =
      out.features.col(data::kDurationIndex).cwiseMax(kMinDuration);
  out.manifest.recipe = recipe;
  out.manifest.sources = {"svae"};
  out.manifest.params_id = "PA";
  out.manifest.count = n;
  out.manifest.seed = seed;
  out.check();
  return out;
}

void SvaeModel::save(const std::string& path_prefix, std::uint64_t seed, long step) const {
  nn::CheckpointWriter w;
  w.set_seed(seed);
  w.set_step(step);
  w.add_network("encoder", encoder);
  w.add_network("decoder", decoder);
  w.meta()["normalization"] = stats.to_json();
  w.meta()["svae_config"] = {{"latent_dim", config.latent_dim}, {"hidden", config.hidden},
                             {"layer_norm", config.layer_norm}, {"lambda", config.lambda},
                             {"lr", config.lr},                 {"batch", config.batch},
                             {"epochs", config.epochs}};
  w.write(path_prefix);
}

SvaeModel SvaeModel::load(const std::string& path_prefix) {
  nn::CheckpointReader r(path_prefix);
  SvaeModel m;
  m.encoder = r.get_network("encoder");
  m.decoder = r.get_network("decoder");
  m.stats = data::NormalizationStats::from_json(r.meta().at("normalization"));
  const auto& j = r.meta().at("svae_config");
  m.config.latent_dim = j.at("latent_dim").get<int>();
  m.config.hidden = j.at("hidden").get<std::vector<int>>();
  m.config.layer_norm = j.at("layer_norm").get<bool>();
  m.config.lambda = j.at("lambda").get<double>();
  m.config.lr = j.at("lr").get<double>();
  m.config.batch = j.at("batch").get<int>();
  m.config.epochs = j.at("epochs").get<int>();
  return m;
}

}  // namespace lander::gen
