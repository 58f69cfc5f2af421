#include "lander/gen/mivae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "lander/common/error.hpp"
#include "lander/nn/adam.hpp"
#include "lander/nn/checkpoint.hpp"
#include "lander/nn/gaussian.hpp"

namespace lander::gen {

void MiVaeConfig::validate() const {
  if (latent_dim <= 0 || batch <= 0 || epochs <= 0)
    throw ConfigError("mivae: sizes must be positive");
  if (lambda1 < 0 || lambda2 < 0 || lambda4 < 0 || beta < 0)
    throw ConfigError("mivae: loss weights must be >= 0");
  if (warmup_epochs > epochs) throw ConfigError("mivae: warmup exceeds epoch budget");
  if (z1_var <= 0 || z2_var <= 0 || z_var <= 0) throw ConfigError("mivae: prior variances must be > 0");
}

namespace {

nn::NetworkSpec encoder_spec(const MiVaeConfig& c, int heads) {
  nn::NetworkSpec s;
  s.widths.push_back(data::kDatumLen);
  s.widths.insert(s.widths.end(), c.hidden.begin(), c.hidden.end());
  s.widths.push_back(c.latent_dim);
  s.layer_norm = c.layer_norm;
  s.head = nn::OutputHead::kGaussian;
  s.gaussian_heads = heads;
  return s;
}

nn::NetworkSpec decoder_spec(const MiVaeConfig& c) {
  nn::NetworkSpec s;
  s.widths.push_back(2 * c.latent_dim);
  s.widths.insert(s.widths.end(), c.hidden.begin(), c.hidden.end());
  s.widths.push_back(data::kDatumLen);
  s.layer_norm = c.layer_norm;
  return s;
}

Eigen::MatrixXd reparam(const Eigen::MatrixXd& mu, const Eigen::MatrixXd& lv,
                        const Eigen::MatrixXd& eps) {
  return mu.array() + (0.5 * lv.array()).exp() * eps.array();
}

}  // namespace

MiVaeModel MiVaeModel::make(const MiVaeConfig& config, Rng& rng) {
  config.validate();
  MiVaeModel m;
  m.encoder1 = nn::NetworkParams::init(encoder_spec(config, 2), rng);
  m.encoder2 = nn::NetworkParams::init(encoder_spec(config, 1), rng);
  m.decoder1 = nn::NetworkParams::init(decoder_spec(config), rng);
  m.decoder2 = nn::NetworkParams::init(decoder_spec(config), rng);
  m.ema = MiEmaState::make(2 * config.latent_dim, config.ema_decay);
  m.config = config;
  return m;
}

MiVaeNoise MiVaeNoise::sample(int latent_dim, long batch, Rng& rng) {
  MiVaeNoise n;
  auto fill = [&](Eigen::MatrixXd& m) {
    m.resize(latent_dim, batch);
    for (long i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  };
  fill(n.z1);
  fill(n.z2);
  fill(n.z_real);
  fill(n.z_ideal);
  return n;
}

MiVaeLossParts mivae_loss(const MiVaeModel& model, const Eigen::MatrixXd& real_batch,
                          const Eigen::MatrixXd& ideal_batch, double beta,
                          const MiVaeNoise& noise, MiVaeGrads* grads, MiEstimate* mi_out) {
  const long b = real_batch.cols();
  if (ideal_batch.cols() != b || b < 2)
    throw ShapeError("mivae_loss: domains need equal batch size >= 2");
  const double inv_b = 1.0 / static_cast<double>(b);
  const auto& cfg = model.config;

  // domain-specific latents from the shared-trunk heads of encoder 1
  auto enc1_real = nn::forward_gaussian(model.encoder1, real_batch);
  auto enc1_ideal = nn::forward_gaussian(model.encoder1, ideal_batch);
  const Eigen::MatrixXd z1 = reparam(enc1_real.mu[0], enc1_real.log_var[0], noise.z1);
  const Eigen::MatrixXd z2 = reparam(enc1_ideal.mu[1], enc1_ideal.log_var[1], noise.z2);

  // shared latent from encoder 2, evaluated on both domains
  auto enc2_real = nn::forward_gaussian(model.encoder2, real_batch);
  auto enc2_ideal = nn::forward_gaussian(model.encoder2, ideal_batch);
  const Eigen::MatrixXd zr = reparam(enc2_real.mu[0], enc2_real.log_var[0], noise.z_real);
  const Eigen::MatrixXd zi = reparam(enc2_ideal.mu[0], enc2_ideal.log_var[0], noise.z_ideal);

  Eigen::MatrixXd z_star1(2 * cfg.latent_dim, b), z_star2(2 * cfg.latent_dim, b);
  z_star1.topRows(cfg.latent_dim) = z1;
  z_star1.bottomRows(cfg.latent_dim) = zr;
  z_star2.topRows(cfg.latent_dim) = z2;
  z_star2.bottomRows(cfg.latent_dim) = zi;

  auto dec1 = nn::forward(model.decoder1, z_star1);
  auto dec2 = nn::forward(model.decoder2, z_star2);

  MiVaeLossParts parts;
  parts.recon1 = (real_batch - dec1.output).squaredNorm() * inv_b;
  parts.recon2 = (ideal_batch - dec2.output).squaredNorm() * inv_b;
  parts.kl1 = nn::kl_to_prior(enc1_real.mu[0], enc1_real.log_var[0], cfg.z1_mean, cfg.z1_var).sum() * inv_b;
  parts.kl2 = nn::kl_to_prior(enc1_ideal.mu[1], enc1_ideal.log_var[1], cfg.z2_mean, cfg.z2_var).sum() * inv_b;
  parts.klz = 0.5 * (nn::kl_to_prior(enc2_real.mu[0], enc2_real.log_var[0], cfg.z_mean, cfg.z_var).sum() +
                     nn::kl_to_prior(enc2_ideal.mu[0], enc2_ideal.log_var[0], cfg.z_mean, cfg.z_var).sum()) *
             inv_b;

  MiEstimate est = mi_estimate(z1, z2, model.ema);
  parts.mi = est.mi;
  parts.total = parts.recon1 + parts.recon2 + cfg.lambda1 * parts.kl1 + cfg.lambda2 * parts.kl2 +
                cfg.lambda4 * parts.klz + beta * parts.mi;
  if (!std::isfinite(parts.total)) throw DivergenceError("mivae_loss: non-finite loss");
  if (mi_out) *mi_out = est;

  if (grads) {
    // reconstruction paths
    Eigen::MatrixXd d_out1 = 2.0 * inv_b * (dec1.output - real_batch);
    Eigen::MatrixXd d_out2 = 2.0 * inv_b * (dec2.output - ideal_batch);
    Eigen::MatrixXd d_zstar1 = nn::backward(model.decoder1, dec1.rec, d_out1, grads->decoder1);
    Eigen::MatrixXd d_zstar2 = nn::backward(model.decoder2, dec2.rec, d_out2, grads->decoder2);

    Eigen::MatrixXd d_z1 = d_zstar1.topRows(cfg.latent_dim);
    Eigen::MatrixXd d_zr = d_zstar1.bottomRows(cfg.latent_dim);
    Eigen::MatrixXd d_z2 = d_zstar2.topRows(cfg.latent_dim);
    Eigen::MatrixXd d_zi = d_zstar2.bottomRows(cfg.latent_dim);

    // mutual-information path (current batch covariance only)
    d_z1 += beta * est.d_z1;
    d_z2 += beta * est.d_z2;

    // encoder 1, real batch through head 0
    Eigen::MatrixXd d_mu1 = d_z1;
    Eigen::MatrixXd d_lv1 = (0.5 * (z1 - enc1_real.mu[0]).array() * d_z1.array()).matrix();
    nn::kl_to_prior_backward(enc1_real.mu[0], enc1_real.log_var[0], cfg.z1_mean, cfg.z1_var,
                             cfg.lambda1 * inv_b, d_mu1, d_lv1);
    const Eigen::MatrixXd empty;
    nn::backward_gaussian(model.encoder1, enc1_real.rec, {d_mu1, empty}, {d_lv1, empty},
                          grads->encoder1);

    // encoder 1, ideal batch through head 1
    Eigen::MatrixXd d_mu2 = d_z2;
    Eigen::MatrixXd d_lv2 = (0.5 * (z2 - enc1_ideal.mu[1]).array() * d_z2.array()).matrix();
    nn::kl_to_prior_backward(enc1_ideal.mu[1], enc1_ideal.log_var[1], cfg.z2_mean, cfg.z2_var,
                             cfg.lambda2 * inv_b, d_mu2, d_lv2);
    nn::backward_gaussian(model.encoder1, enc1_ideal.rec, {empty, d_mu2}, {empty, d_lv2},
                          grads->encoder1);

    // encoder 2 on both domains (half weight each in the KL term)
    Eigen::MatrixXd d_mur = d_zr;
    Eigen::MatrixXd d_lvr = (0.5 * (zr - enc2_real.mu[0]).array() * d_zr.array()).matrix();
    nn::kl_to_prior_backward(enc2_real.mu[0], enc2_real.log_var[0], cfg.z_mean, cfg.z_var,
                             0.5 * cfg.lambda4 * inv_b, d_mur, d_lvr);
    nn::backward_gaussian(model.encoder2, enc2_real.rec, {d_mur}, {d_lvr}, grads->encoder2);

    Eigen::MatrixXd d_mui = d_zi;
    Eigen::MatrixXd d_lvi = (0.5 * (zi - enc2_ideal.mu[0]).array() * d_zi.array()).matrix();
    nn::kl_to_prior_backward(enc2_ideal.mu[0], enc2_ideal.log_var[0], cfg.z_mean, cfg.z_var,
                             0.5 * cfg.lambda4 * inv_b, d_mui, d_lvi);
    nn::backward_gaussian(model.encoder2, enc2_ideal.rec, {d_mui}, {d_lvi}, grads->encoder2);
  }
  return parts;
}

MiVaeTrainResult train_mivae(const data::Dataset& real, const data::Dataset& ideal,
                             const MiVaeConfig& config, std::uint64_t seed) {
  real.check();
  ideal.check();
  Rng init_rng(derive_seed(seed, "mivae-init"));
  Rng noise_rng(derive_seed(seed, "mivae-noise"));
  Rng shuffle_rng(derive_seed(seed, "mivae-shuffle"));
  Rng resample_rng(derive_seed(seed, "mivae-resample"));

  MiVaeTrainResult res;
  res.model = MiVaeModel::make(config, init_rng);
  res.model.real_stats = data::NormalizationStats::fit(real.features);
  res.model.ideal_stats = data::NormalizationStats::fit(ideal.features);
  const Eigen::MatrixXd xr = res.model.real_stats.apply(real.features).transpose();
  const Eigen::MatrixXd xi = res.model.ideal_stats.apply(ideal.features).transpose();
  const long n_real = xr.cols();
  const long n_ideal = xi.cols();

  nn::AdamConfig adam_cfg;
  adam_cfg.lr = config.lr;
  nn::AdamState opt_e1(res.model.encoder1.size(), adam_cfg);
  nn::AdamState opt_e2(res.model.encoder2.size(), adam_cfg);
  nn::AdamState opt_d1(res.model.decoder1.size(), adam_cfg);
  nn::AdamState opt_d2(res.model.decoder2.size(), adam_cfg);

  std::vector<long> ideal_order(static_cast<std::size_t>(n_ideal));
  std::iota(ideal_order.begin(), ideal_order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double beta = epoch < config.warmup_epochs ? 0.0 : config.beta;
    std::shuffle(ideal_order.begin(), ideal_order.end(), shuffle_rng.engine());
    MiVaeLossParts epoch_parts;
    long batches = 0;
    for (long start = 0; start < n_ideal; start += config.batch) {
      const long b = std::min<long>(config.batch, n_ideal - start);
      if (b < 2) continue;  // MI needs at least two samples
      Eigen::MatrixXd ideal_batch(data::kDatumLen, b);
      for (long k = 0; k < b; ++k)
        ideal_batch.col(k) = xi.col(ideal_order[static_cast<std::size_t>(start + k)]);
      // the smaller real domain is resampled with replacement
      Eigen::MatrixXd real_batch(data::kDatumLen, b);
      for (long k = 0; k < b; ++k)
        real_batch.col(k) = xr.col(static_cast<long>(resample_rng.index(static_cast<std::uint64_t>(n_real))));

      const MiVaeNoise noise = MiVaeNoise::sample(config.latent_dim, b, noise_rng);
      MiVaeGrads grads(res.model);
      MiEstimate est;
      const MiVaeLossParts parts =
          mivae_loss(res.model, real_batch, ideal_batch, beta, noise, &grads, &est);
      nn::adam_step(res.model.encoder1.flat, grads.encoder1.flat, opt_e1);
      nn::adam_step(res.model.encoder2.flat, grads.encoder2.flat, opt_e2);
      nn::adam_step(res.model.decoder1.flat, grads.decoder1.flat, opt_d1);
      nn::adam_step(res.model.decoder2.flat, grads.decoder2.flat, opt_d2);
      mi_commit(res.model.ema, est);

      epoch_parts.total += parts.total;
      epoch_parts.recon1 += parts.recon1;
      epoch_parts.recon2 += parts.recon2;
      epoch_parts.kl1 += parts.kl1;
      epoch_parts.kl2 += parts.kl2;
      epoch_parts.klz += parts.klz;
      epoch_parts.mi += parts.mi;
      ++batches;
    }
    const double inv = 1.0 / static_cast<double>(batches);
    epoch_parts.total *= inv;
    epoch_parts.recon1 *= inv;
    epoch_parts.recon2 *= inv;
    epoch_parts.kl1 *= inv;
    epoch_parts.kl2 *= inv;
    epoch_parts.klz *= inv;
    epoch_parts.mi *= inv;
    res.curve.push_back(epoch_parts);
  }
  return res;
}

data::Dataset mivae_generate(const MiVaeModel& model, const data::Dataset& real,
                             const data::Dataset& ideal, long n, std::uint64_t seed,
                             const std::string& recipe) {
  real.check();
  ideal.check();
  Rng rng(derive_seed(seed, "mivae-generate"));
  const auto& cfg = model.config;

  // one z1 sample per real datum (encoder-1 posterior, head 0)
  const Eigen::MatrixXd xr = model.real_stats.apply(real.features).transpose();
  auto enc1 = nn::forward_gaussian(model.encoder1, xr);
  Eigen::MatrixXd eps1(cfg.latent_dim, xr.cols());
  for (long i = 0; i < eps1.size(); ++i) eps1.data()[i] = rng.normal();
  const Eigen::MatrixXd z1 = reparam(enc1.mu[0], enc1.log_var[0], eps1);

  // one shared-z sample per datum across real + ideal (encoder-2 posteriors)
  const Eigen::MatrixXd xi = model.ideal_stats.apply(ideal.features).transpose();
  Eigen::MatrixXd z_sources(cfg.latent_dim, xr.cols() + xi.cols());
  {
    auto enc2r = nn::forward_gaussian(model.encoder2, xr);
    Eigen::MatrixXd eps(cfg.latent_dim, xr.cols());
    for (long i = 0; i < eps.size(); ++i) eps.data()[i] = rng.normal();
    z_sources.leftCols(xr.cols()) = reparam(enc2r.mu[0], enc2r.log_var[0], eps);
    auto enc2i = nn::forward_gaussian(model.encoder2, xi);
    Eigen::MatrixXd eps2(cfg.latent_dim, xi.cols());
    for (long i = 0; i < eps2.size(); ++i) eps2.data()[i] = rng.normal();
    z_sources.rightCols(xi.cols()) = reparam(enc2i.mu[0], enc2i.log_var[0], eps2);
  }

  const long n_z1 = z1.cols();
  const long n_z = z_sources.cols();
  const long cross = n_z1 * n_z;
  if (n > cross)
    throw ConfigError("mivae_generate: requested " + std::to_string(n) + " samples but the (z1, z) cross product only has " +
                      std::to_string(cross));

  // n distinct pair indices drawn without replacement from the cross product
  std::unordered_set<long> chosen;
  std::vector<long> picks;
  picks.reserve(static_cast<std::size_t>(n));
  while (static_cast<long>(picks.size()) < n) {
    const long idx = static_cast<long>(rng.index(static_cast<std::uint64_t>(cross)));
    if (chosen.insert(idx).second) picks.push_back(idx);
  }

  data::Dataset out;
  out.features.resize(n, data::kDatumLen);
  const long chunk = 256;
  for (long start = 0; start < n; start += chunk) {
    const long b = std::min(chunk, n - start);
    Eigen::MatrixXd z_star(2 * cfg.latent_dim, b);
    for (long k = 0; k < b; ++k) {
      const long idx = picks[static_cast<std::size_t>(start + k)];
      z_star.col(k).topRows(cfg.latent_dim) = z1.col(idx / n_z);
      z_star.col(k).bottomRows(cfg.latent_dim) = z_sources.col(idx % n_z);
    }
    const Eigen::MatrixXd decoded = nn::forward(model.decoder1, z_star).output;
    out.features.middleRows(start, b) = model.real_stats.invert(decoded.transpose());
  }
  out.features.col(data::kDurationIndex) =
      out.features.col(data::kDurationIndex).cwiseMax(0.1);
  out.manifest.recipe = recipe;
  out.manifest.sources = {"mivae"};
  out.manifest.params_id = "PA";
  out.manifest.count = n;
  out.manifest.seed = seed;
  out.check();
  return out;
}

void MiVaeModel::save(const std::string& path_prefix, std::uint64_t seed, long step) const {
  nn::CheckpointWriter w;
  w.set_seed(seed);
  w.set_step(step);
  w.add_network("encoder1", encoder1);
  w.add_network("encoder2", encoder2);
  w.add_network("decoder1", decoder1);
  w.add_network("decoder2", decoder2);
  w.meta()["real_normalization"] = real_stats.to_json();
  w.meta()["ideal_normalization"] = ideal_stats.to_json();
  std::vector<double> cov(ema.cov.data(), ema.cov.data() + ema.cov.size());
  std::vector<double> mean(ema.mean.data(), ema.mean.data() + ema.mean.size());
  w.meta()["ema"] = {{"cov", cov}, {"mean", mean}, {"decay", ema.decay}, {"count", ema.count}};
  w.meta()["mivae_config"] = {
      {"latent_dim", config.latent_dim}, {"hidden", config.hidden},
      {"layer_norm", config.layer_norm}, {"lambda1", config.lambda1},
      {"lambda2", config.lambda2},       {"lambda4", config.lambda4},
      {"beta", config.beta},             {"warmup_epochs", config.warmup_epochs},
      {"ema_decay", config.ema_decay},   {"lr", config.lr},
      {"batch", config.batch},           {"epochs", config.epochs},
      {"z1_mean", config.z1_mean},       {"z1_var", config.z1_var},
      {"z2_mean", config.z2_mean},       {"z2_var", config.z2_var},
      {"z_mean", config.z_mean},         {"z_var", config.z_var}};
  w.write(path_prefix);
}

MiVaeModel MiVaeModel::load(const std::string& path_prefix) {
  nn::CheckpointReader r(path_prefix);
  MiVaeModel m;
  m.encoder1 = r.get_network("encoder1");
  m.encoder2 = r.get_network("encoder2");
  m.decoder1 = r.get_network("decoder1");
  m.decoder2 = r.get_network("decoder2");
  m.real_stats = data::NormalizationStats::from_json(r.meta().at("real_normalization"));
  m.ideal_stats = data::NormalizationStats::from_json(r.meta().at("ideal_normalization"));
  const auto& je = r.meta().at("ema");
  auto cov = je.at("cov").get<std::vector<double>>();
  auto mean = je.at("mean").get<std::vector<double>>();
  const int d = static_cast<int>(mean.size());
  m.ema.cov = Eigen::Map<Eigen::MatrixXd>(cov.data(), d, d);
  m.ema.mean = Eigen::Map<Eigen::VectorXd>(mean.data(), d);
  m.ema.decay = je.at("decay").get<double>();
  m.ema.count = je.at("count").get<long>();
  const auto& j = r.meta().at("mivae_config");
  m.config.latent_dim = j.at("latent_dim").get<int>();
  m.config.hidden = j.at("hidden").get<std::vector<int>>();
  m.config.layer_norm = j.at("layer_norm").get<bool>();
  m.config.lambda1 = j.at("lambda1").get<double>();
  m.config.lambda2 = j.at("lambda2").get<double>();
  m.config.lambda4 = j.at("lambda4").get<double>();
  m.config.beta = j.at("beta").get<double>();
  m.config.warmup_epochs = j.at("warmup_epochs").get<int>();
  m.config.ema_decay = j.at("ema_decay").get<double>();
  m.config.lr = j.at("lr").get<double>();
  m.config.batch = j.at("batch").get<int>();
  m.config.epochs = j.at("epochs").get<int>();
  m.config.z1_mean = j.at("z1_mean").get<double>();
  m.config.z1_var = j.at("z1_var").get<double>();
  m.config.z2_mean = j.at("z2_mean").get<double>();
  m.config.z2_var = j.at("z2_var").get<double>();
  m.config.z_mean = j.at("z_mean").get<double>();
  m.config.z_var = j.at("z_var").get<double>();
  return m;
}

}  // namespace lander::gen
