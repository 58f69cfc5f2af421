#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "lander/common/error.hpp"
#include "lander/gen/mi.hpp"
#include "lander/gen/mivae.hpp"
#include "lander/gen/svae.hpp"
#include "lander/nn/gaussian.hpp"

using namespace lander;
using namespace lander::gen;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

data::Dataset random_dataset(long n, std::uint64_t seed, const std::string& recipe = "test") {
  Rng rng(seed);
  data::Dataset ds;
  ds.features.resize(n, data::kDatumLen);
  for (long i = 0; i < ds.features.size(); ++i) ds.features.data()[i] = rng.normal();
  // keep durations positive so the set looks like real data
  ds.features.col(data::kDurationIndex) =
      ds.features.col(data::kDurationIndex).array().abs() + 5.0;
  ds.manifest.recipe = recipe;
  ds.manifest.params_id = "PA";
  ds.manifest.count = n;
  ds.manifest.seed = seed;
  return ds;
}

SvaeConfig tiny_svae() {
  SvaeConfig c;
  c.latent_dim = 3;
  c.hidden = {16};
  c.batch = 4;
  c.epochs = 10;
  return c;
}

MiVaeConfig tiny_mivae() {
  MiVaeConfig c;
  c.latent_dim = 3;
  c.hidden = {12};
  c.batch = 4;
  c.epochs = 10;
  c.warmup_epochs = 2;
  return c;
}

}  // namespace

// ---------------------------------------------------------------- mi

TEST_CASE("gaussian mi: block-diagonal covariance factorizes to zero") {
  MatrixXd cov = MatrixXd::Zero(4, 4);
  cov.topLeftCorner(2, 2) << 2.0, 0.3, 0.3, 1.0;
  cov.bottomRightCorner(2, 2) << 0.5, -0.1, -0.1, 0.7;
  CHECK(std::abs(gaussian_mi(cov, 2, 0.0)) < 1e-12);
}

TEST_CASE("gaussian mi: dim-1 correlation closed form") {
  MatrixXd cov(2, 2);
  cov << 1.0, 0.5, 0.5, 1.0;
  const double want = -0.5 * std::log(1.0 - 0.25);
  CHECK(gaussian_mi(cov, 1) == doctest::Approx(want).epsilon(1e-6));
  CHECK(std::abs(gaussian_mi(cov, 1, 0.0) - want) < 1e-12);
}

TEST_CASE("gaussian mi: non-negative on random positive-definite covariances") {
  Rng rng(5);
  for (int rep = 0; rep < 1000; ++rep) {
    const int d1 = 1 + static_cast<int>(rng.index(3));
    const int d2 = 1 + static_cast<int>(rng.index(3));
    MatrixXd a(d1 + d2, d1 + d2);
    for (long i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
    MatrixXd cov = a * a.transpose() + 0.1 * MatrixXd::Identity(d1 + d2, d1 + d2);
    CHECK(gaussian_mi(cov, d1) >= -1e-10);
  }
}

TEST_CASE("gaussian mi: indefinite matrix raises after regularization") {
  MatrixXd cov(2, 2);
  cov << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3, -1
  CHECK_THROWS_AS(gaussian_mi(cov, 1), EstimatorError);
}

TEST_CASE("mi_estimate: matches the closed form on its own blended covariance") {
  Rng rng(7);
  MatrixXd z1(2, 64), z2(2, 64);
  for (long i = 0; i < z1.size(); ++i) z1.data()[i] = rng.normal();
  for (long c = 0; c < z2.cols(); ++c)
    z2.col(c) = 0.8 * z1.col(c) + 0.3 * Eigen::Vector2d(rng.normal(), rng.normal());
  MiEmaState state = MiEmaState::make(4);
  MiEstimate est = mi_estimate(z1, z2, state);
  CHECK(est.mi == doctest::Approx(gaussian_mi(est.blended_cov, 2)).epsilon(1e-12));
  CHECK(est.mi > 0.0);  // strongly dependent blocks

  // committing moves the state; a second estimate blends against it
  mi_commit(state, est);
  CHECK(state.count == 1);
  CHECK(state.cov == est.blended_cov);
}

TEST_CASE("mi_estimate: finite-difference gradient through the batch covariance") {
  Rng rng(11);
  MatrixXd z1(2, 8), z2(3, 8);
  for (long i = 0; i < z1.size(); ++i) z1.data()[i] = rng.normal();
  for (long i = 0; i < z2.size(); ++i) z2.data()[i] = 0.5 * rng.normal();
  z2.row(0) += z1.row(0);
  MiEmaState state = MiEmaState::make(5);
  // seed the EMA with one unrelated batch so the history term is non-trivial
  {
    MatrixXd a(2, 8), b(3, 8);
    for (long i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
    for (long i = 0; i < b.size(); ++i) b.data()[i] = rng.normal();
    mi_commit(state, mi_estimate(a, b, state));
  }
  MiEstimate est = mi_estimate(z1, z2, state);

  VectorXd flat(z1.size() + z2.size());
  flat << Eigen::Map<const VectorXd>(z1.data(), z1.size()),
      Eigen::Map<const VectorXd>(z2.data(), z2.size());
  VectorXd analytic(flat.size());
  analytic << Eigen::Map<const VectorXd>(est.d_z1.data(), est.d_z1.size()),
      Eigen::Map<const VectorXd>(est.d_z2.data(), est.d_z2.size());
  auto f = [&](const VectorXd& v) {
    MatrixXd a = Eigen::Map<const MatrixXd>(v.data(), 2, 8);
    MatrixXd b = Eigen::Map<const MatrixXd>(v.data() + 16, 3, 8);
    return mi_estimate(a, b, state).mi;
  };
  auto rep = gradcheck::check(f, flat, analytic, 1e-5, 1e-5);
  CHECK(rep.frac_ok == 1.0);
}

// ---------------------------------------------------------------- svae

TEST_CASE("svae_loss: zero model on zero batch gives zero loss at lambda 0") {
  SvaeConfig cfg = tiny_svae();
  Rng rng(1);
  SvaeModel m = SvaeModel::make(cfg, rng);
  m.encoder.set_zero();
  m.decoder.set_zero();
  MatrixXd batch = MatrixXd::Zero(data::kDatumLen, 2);
  MatrixXd eps = MatrixXd::Zero(cfg.latent_dim, 2);
  auto parts = svae_loss(m, batch, 0.0, eps, nullptr, nullptr);
  CHECK(parts.total == 0.0);
  CHECK(parts.recon == 0.0);
}

TEST_CASE("svae_loss: standard-normal encoder makes the KL vanish") {
  SvaeConfig cfg = tiny_svae();
  Rng rng(2);
  SvaeModel m = SvaeModel::make(cfg, rng);
  m.encoder.set_zero();  // mu = 0, log_var = 0 -> q = N(0,1)
  MatrixXd batch = MatrixXd::Random(data::kDatumLen, 3);
  MatrixXd eps = MatrixXd::Random(cfg.latent_dim, 3);
  auto parts = svae_loss(m, batch, 5.0, eps, nullptr, nullptr);
  CHECK(parts.kl == 0.0);
  CHECK(parts.total == doctest::Approx(parts.recon));
}

TEST_CASE("svae_loss: recomposition from independently computed parts") {
  SvaeConfig cfg = tiny_svae();
  Rng rng(3);
  SvaeModel m = SvaeModel::make(cfg, rng);
  MatrixXd batch = MatrixXd::Random(data::kDatumLen, 2);
  MatrixXd eps = MatrixXd::Random(cfg.latent_dim, 2);
  const double lambda = 1.7;
  auto parts = svae_loss(m, batch, lambda, eps, nullptr, nullptr);

  // independent recomputation from raw forward passes
  auto enc = nn::forward_gaussian(m.encoder, batch);
  MatrixXd z = enc.mu[0].array() + (0.5 * enc.log_var[0].array()).exp() * eps.array();
  MatrixXd xhat = nn::forward(m.decoder, z).output;
  double recon = 0.0, kl = 0.0;
  for (int c = 0; c < 2; ++c) {
    recon += (batch.col(c) - xhat.col(c)).squaredNorm();
    VectorXd var = enc.log_var[0].col(c).array().exp();
    kl += nn::kl_diag_gaussian(enc.mu[0].col(c), var, VectorXd::Zero(cfg.latent_dim),
                               VectorXd::Ones(cfg.latent_dim));
  }
  recon /= 2.0;
  kl /= 2.0;
  CHECK(parts.total == doctest::Approx(recon + lambda * kl).epsilon(1e-10));
}

TEST_CASE("svae_loss: finite-difference gradients") {
  SvaeConfig cfg = tiny_svae();
  Rng rng(4);
  SvaeModel m = SvaeModel::make(cfg, rng);
  MatrixXd batch = MatrixXd::Random(data::kDatumLen, 3);
  MatrixXd eps = MatrixXd::Random(cfg.latent_dim, 3);
  nn::NetworkParams eg(m.encoder.spec()), dg(m.decoder.spec());
  svae_loss(m, batch, 1.3, eps, &eg, &dg);

  VectorXd flat(m.encoder.size() + m.decoder.size());
  flat << m.encoder.flat, m.decoder.flat;
  VectorXd analytic(flat.size());
  analytic << eg.flat, dg.flat;
  auto f = [&](const VectorXd& v) {
    SvaeModel q = m;
    q.encoder.flat = v.head(m.encoder.size());
    q.decoder.flat = v.tail(m.decoder.size());
    return svae_loss(q, batch, 1.3, eps, nullptr, nullptr).total;
  };
  auto rep = gradcheck::check(f, flat, analytic);
  CHECK(rep.frac_ok >= 0.99);
}

TEST_CASE("train_svae: overfits four duplicated datums and is deterministic") {
  data::Dataset base = random_dataset(4, 21);
  base.features.row(1) = base.features.row(0);
  base.features.row(3) = base.features.row(2);
  SvaeConfig cfg = tiny_svae();
  cfg.latent_dim = 8;
  cfg.hidden = {64};
  cfg.epochs = 200;
  auto a = train_svae(base, cfg, 77);
  auto b = train_svae(base, cfg, 77);
  REQUIRE(a.curve.size() == 200);
  CHECK(a.curve.back().recon < 0.1 * a.curve.front().recon);
  for (std::size_t i = 0; i < a.curve.size(); ++i)
    CHECK(a.curve[i].total == b.curve[i].total);
  CHECK(a.model.encoder.flat == b.model.encoder.flat);
}

TEST_CASE("svae_generate: shape, determinism, wind features near the training range") {
  data::Dataset base = random_dataset(32, 22);
  SvaeConfig cfg = tiny_svae();
  cfg.epochs = 30;
  auto trained = train_svae(base, cfg, 5);
  data::Dataset g1 = svae_generate(trained.model, 100, 9, "gen-test");
  data::Dataset g2 = svae_generate(trained.model, 100, 9, "gen-test");
  CHECK(g1.count() == 100);
  CHECK(g1.features == g2.features);
  CHECK(g1.features.cols() == data::kDatumLen);
  CHECK((g1.features.col(data::kDurationIndex).array() >= kMinDuration).all());

  const double wx_mean = trained.model.stats.mean[data::kWindXIndex];
  const double wx_std = trained.model.stats.std[data::kWindXIndex];
  long in_range = 0;
  for (long i = 0; i < g1.count(); ++i)
    if (std::abs(g1.features(i, data::kWindXIndex) - wx_mean) <= 6.0 * wx_std) ++in_range;
  CHECK(static_cast<double>(in_range) / static_cast<double>(g1.count()) >= 0.99);
}

// ---------------------------------------------------------------- mivae

TEST_CASE("mivae_loss: echo decoders and zero weights give zero loss") {
  MiVaeConfig cfg = tiny_mivae();
  Rng rng(31);
  MiVaeModel m = MiVaeModel::make(cfg, rng);
  m.encoder1.set_zero();
  m.encoder2.set_zero();
  m.decoder1.set_zero();
  m.decoder2.set_zero();
  MatrixXd zero = MatrixXd::Zero(data::kDatumLen, 4);
  MiVaeNoise noise;
  noise.z1 = noise.z2 = noise.z_real = noise.z_ideal = MatrixXd::Zero(cfg.latent_dim, 4);
  // beta 0 and all lambdas 0
  MiVaeModel m0 = m;
  m0.config.lambda1 = m0.config.lambda2 = m0.config.lambda4 = 0.0;
  auto parts = mivae_loss(m0, zero, zero, 0.0, noise, nullptr, nullptr);
  CHECK(parts.recon1 == 0.0);
  CHECK(parts.recon2 == 0.0);
  CHECK(parts.total == 0.0);
}

TEST_CASE("mivae_loss: heads frozen at their priors zero the structured KLs") {
  MiVaeConfig cfg = tiny_mivae();
  Rng rng(32);
  MiVaeModel m = MiVaeModel::make(cfg, rng);
  m.encoder1.set_zero();
  // head 0 already matches N(0,1); pin head 1 to N(1, 2)
  m.encoder1.block("head1.mu.b").setConstant(1.0);
  m.encoder1.block("head1.lv.b").setConstant(std::log(2.0));
  Rng data_rng(33);
  MatrixXd xr(data::kDatumLen, 4), xi(data::kDatumLen, 4);
  for (long i = 0; i < xr.size(); ++i) xr.data()[i] = data_rng.normal();
  for (long i = 0; i < xi.size(); ++i) xi.data()[i] = data_rng.normal();
  MiVaeNoise noise = MiVaeNoise::sample(cfg.latent_dim, 4, data_rng);
  auto parts = mivae_loss(m, xr, xi, 0.0, noise, nullptr, nullptr);
  CHECK(parts.kl1 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(parts.kl2 == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("mivae_loss: recomposition of the six terms") {
  MiVaeConfig cfg = tiny_mivae();
  cfg.lambda1 = 0.7;
  cfg.lambda2 = 1.3;
  cfg.lambda4 = 0.5;
  Rng rng(34);
  MiVaeModel m = MiVaeModel::make(cfg, rng);
  Rng data_rng(35);
  MatrixXd xr(data::kDatumLen, 5), xi(data::kDatumLen, 5);
  for (long i = 0; i < xr.size(); ++i) xr.data()[i] = data_rng.normal();
  for (long i = 0; i < xi.size(); ++i) xi.data()[i] = data_rng.normal();
  MiVaeNoise noise = MiVaeNoise::sample(cfg.latent_dim, 5, data_rng);
  auto parts = mivae_loss(m, xr, xi, 20.0, noise, nullptr, nullptr);
  const double recomposed = parts.recon1 + parts.recon2 + cfg.lambda1 * parts.kl1 +
                            cfg.lambda2 * parts.kl2 + cfg.lambda4 * parts.klz + 20.0 * parts.mi;
  CHECK(parts.total == doctest::Approx(recomposed).epsilon(1e-10));
  CHECK(parts.recon1 >= 0.0);
  CHECK(parts.recon2 >= 0.0);
  CHECK(parts.kl1 >= 0.0);
  CHECK(parts.kl2 >= 0.0);
  CHECK(parts.klz >= 0.0);
  CHECK(parts.mi >= 0.0);
}

TEST_CASE("mivae_loss: domains decouple when the coupling terms are off") {
  MiVaeConfig cfg = tiny_mivae();
  cfg.lambda4 = 0.0;
  Rng rng(36);
  MiVaeModel m = MiVaeModel::make(cfg, rng);
  m.encoder2.set_zero();  // shared latent carries no data information
  Rng data_rng(37);
  MatrixXd xr(data::kDatumLen, 4), xi1(data::kDatumLen, 4), xi2(data::kDatumLen, 4);
  for (long i = 0; i < xr.size(); ++i) xr.data()[i] = data_rng.normal();
  for (long i = 0; i < xi1.size(); ++i) xi1.data()[i] = data_rng.normal();
  for (long i = 0; i < xi2.size(); ++i) xi2.data()[i] = data_rng.normal();
  MiVaeNoise noise = MiVaeNoise::sample(cfg.latent_dim, 4, data_rng);
  auto a = mivae_loss(m, xr, xi1, 0.0, noise, nullptr, nullptr);
  auto b = mivae_loss(m, xr, xi2, 0.0, noise, nullptr, nullptr);
  // the real-domain half is untouched by swapping the ideal batch
  CHECK(a.recon1 == doctest::Approx(b.recon1).epsilon(1e-12));
  CHECK(a.kl1 == doctest::Approx(b.kl1).epsilon(1e-12));
}

TEST_CASE("mivae_loss: finite-difference gradients through all four networks and the MI term") {
  MiVaeConfig cfg = tiny_mivae();
  Rng rng(38);
  MiVaeModel m = MiVaeModel::make(cfg, rng);
  Rng data_rng(39);
  MatrixXd xr(data::kDatumLen, 4), xi(data::kDatumLen, 4);
  for (long i = 0; i < xr.size(); ++i) xr.data()[i] = data_rng.normal();
  for (long i = 0; i < xi.size(); ++i) xi.data()[i] = data_rng.normal();
  MiVaeNoise noise = MiVaeNoise::sample(cfg.latent_dim, 4, data_rng);

  MiVaeGrads grads(m);
  mivae_loss(m, xr, xi, 20.0, noise, &grads, nullptr);

  const long n1 = m.encoder1.size(), n2 = m.encoder2.size(), n3 = m.decoder1.size(),
             n4 = m.decoder2.size();
  VectorXd flat(n1 + n2 + n3 + n4);
  flat << m.encoder1.flat, m.encoder2.flat, m.decoder1.flat, m.decoder2.flat;
  VectorXd analytic(flat.size());
  analytic << grads.encoder1.flat, grads.encoder2.flat, grads.decoder1.flat, grads.decoder2.flat;
  auto f = [&](const VectorXd& v) {
    MiVaeModel q = m;
    q.encoder1.flat = v.segment(0, n1);
    q.encoder2.flat = v.segment(n1, n2);
    q.decoder1.flat = v.segment(n1 + n2, n3);
    q.decoder2.flat = v.segment(n1 + n2 + n3, n4);
    return mivae_loss(q, xr, xi, 20.0, noise, nullptr, nullptr).total;
  };
  auto rep = gradcheck::check(f, flat, analytic);
  CHECK(rep.frac_ok >= 0.99);
}

TEST_CASE("train_mivae: toy run is finite, reconstruction decreases, deterministic") {
  data::Dataset real = random_dataset(4, 41, "real");
  data::Dataset ideal = random_dataset(16, 42, "ideal");
  MiVaeConfig cfg = tiny_mivae();
  cfg.epochs = 100;
  cfg.warmup_epochs = 50;
  cfg.hidden = {32};
  auto a = train_mivae(real, ideal, cfg, 55);
  REQUIRE(a.curve.size() == 100);
  for (const auto& p : a.curve) {
    CHECK(std::isfinite(p.total));
    CHECK(p.recon1 >= 0.0);
    CHECK(p.mi >= 0.0);
  }
  CHECK(a.curve.back().recon1 + a.curve.back().recon2 <
        0.9 * (a.curve.front().recon1 + a.curve.front().recon2));
  // warmup gate: identical runs differ only after the MI term activates
  auto b = train_mivae(real, ideal, cfg, 55);
  for (std::size_t i = 0; i < a.curve.size(); ++i) CHECK(a.curve[i].total == b.curve[i].total);
  CHECK(a.model.encoder1.flat == b.model.encoder1.flat);
}

TEST_CASE("mivae_generate: cross-product pairing, uniqueness, determinism") {
  data::Dataset real = random_dataset(5, 43, "real");
  data::Dataset ideal = random_dataset(20, 44, "ideal");
  MiVaeConfig cfg = tiny_mivae();
  cfg.epochs = 20;
  cfg.warmup_epochs = 5;
  auto trained = train_mivae(real, ideal, cfg, 66);

  // cross product: 5 z1 x (5 + 20) z = 125 candidates
  data::Dataset g = mivae_generate(trained.model, real, ideal, 100, 7, "gen");
  CHECK(g.count() == 100);
  for (long i = 0; i < g.count(); ++i)
    for (long j = 0; j < i; ++j) CHECK(g.features.row(i) != g.features.row(j));
  data::Dataset g2 = mivae_generate(trained.model, real, ideal, 100, 7, "gen");
  CHECK(g.features == g2.features);
  CHECK_THROWS_AS(mivae_generate(trained.model, real, ideal, 126, 7, "gen"), ConfigError);
}

TEST_CASE("model checkpoints round trip") {
  data::Dataset real = random_dataset(4, 45, "real");
  data::Dataset ideal = random_dataset(8, 46, "ideal");
  MiVaeConfig cfg = tiny_mivae();
  cfg.epochs = 5;
  cfg.warmup_epochs = 1;
  auto trained = train_mivae(real, ideal, cfg, 67);
  trained.model.save("/tmp/landerlab_test_mivae", 67, 5);
  MiVaeModel back = MiVaeModel::load("/tmp/landerlab_test_mivae");
  CHECK(back.config.beta == cfg.beta);
  CHECK(back.ema.count == trained.model.ema.count);
  CHECK((back.ema.cov - trained.model.ema.cov).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.real_stats.mean == trained.model.real_stats.mean);

  SvaeConfig scfg = tiny_svae();
  auto strained = train_svae(random_dataset(8, 47), scfg, 68);
  strained.model.save("/tmp/landerlab_test_svae", 68, 3);
  SvaeModel sback = SvaeModel::load("/tmp/landerlab_test_svae");
  CHECK(sback.config.latent_dim == scfg.latent_dim);
  CHECK(sback.stats.mean == strained.model.stats.mean);
}
