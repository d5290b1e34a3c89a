#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "spvc/errors.hpp"
#include "spvc/sampler.hpp"
#include "spvc/simulate.hpp"
#include "spvc_validation/oracles.hpp"
#include "test_helpers.hpp"

using namespace spvc;

namespace {

// Small simulated training set: every `stride`-th voxel of each image.
Dataset small_dataset(std::size_t images, std::size_t stride, std::uint64_t seed, MaternParams theta = {1.0, 0.5, 1.0}) {
  SimScenario sc;
  sc.theta = theta;
  Dataset full = simulate_dataset(sc, images, seed, nullptr, "img");
  Dataset out;
  out.feature_names = full.feature_names;
  for (const auto& im : full.images) {
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < im.size(); j += stride) keep.push_back(j);
    out.images.push_back(subset_image(im, keep));
  }
  return out;
}

ModelSpec spec_of(Variant v) {
  ModelSpec s;
  s.variant = v;
  return s;
}

// One image on a row of points with fixed labels and features.
VoxelImage line_image(const std::string& id, const std::vector<std::uint8_t>& region,
                      const std::vector<std::uint8_t>& labels, const Eigen::MatrixXd& y) {
  const auto cols = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(std::sqrt(labels.size()))));
  Coords raw;
  for (std::size_t j = 0; j < labels.size(); ++j) raw.push_back({static_cast<double>(j % cols), static_cast<double>(j / cols)});
  return make_image(id, raw, region, y, labels);
}

bool same(const Globals& a, const Globals& b) {
  for (int s = 0; s < 4; ++s)
    if (a.mu[s] != b.mu[s] || a.gamma[s] != b.gamma[s]) return false;
  return a.sigma == b.sigma && a.theta == b.theta && a.q0 == b.q0;
}

}  // namespace

TEST_CASE("q0 is the probit of the regional prevalence") {
  Dataset ds;
  ds.feature_names = {"f"};
  ds.images.push_back(line_image("a", {0, 0, 1, 1, 1, 1}, {0, 1, 0, 0, 0, 1}, Eigen::MatrixXd::Zero(6, 1)));
  const auto q0 = compute_q0(ds);
  CHECK(q0[0] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(q0[1] == doctest::Approx(-0.6744897501960817).epsilon(1e-12));

  ds.images[0] = line_image("a", {0, 0, 1, 1}, {1, 1, 0, 1}, Eigen::MatrixXd::Zero(4, 1));
  CHECK_THROWS_AS(compute_q0(ds), InputError);
  ds.images[0] = line_image("a", {1, 1, 1, 1}, {0, 1, 0, 1}, Eigen::MatrixXd::Zero(4, 1));
  CHECK_THROWS_AS(compute_q0(ds), InputError);
}

TEST_CASE("kappa signs agree with labels after an update") {
  const Dataset ds = small_dataset(3, 6, 11);
  Sampler s(ds, spec_of(Variant::NNGP_SSE), 5, 0);
  for (int it = 0; it < 3; ++it) {
    s.step();
    for (const auto& im : s.images())
      for (Eigen::Index j = 0; j < im.kappa.size(); ++j)
        REQUIRE((im.kappa[j] > 0.0) == (im.labels[static_cast<std::size_t>(j)] != 0));
  }
}

TEST_CASE("sampler is deterministic and ignores image input order") {
  Dataset ds = small_dataset(3, 6, 12);
  Sampler a(ds, spec_of(Variant::NNGP_SSE), 9, 1);
  std::reverse(ds.images.begin(), ds.images.end());
  Sampler b(ds, spec_of(Variant::NNGP_SSE), 9, 1);
  for (int it = 0; it < 5; ++it) {
    a.step();
    b.step();
  }
  CHECK(same(a.globals(), b.globals()));
  for (std::size_t i = 0; i < a.images().size(); ++i) {
    CHECK(a.images()[i].id == b.images()[i].id);
    CHECK(a.images()[i].w == b.images()[i].w);
    CHECK(a.images()[i].delta == b.images()[i].delta);
  }
  Sampler c(ds, spec_of(Variant::NNGP_SSE), 9, 2);
  c.step();
  Sampler d(ds, spec_of(Variant::NNGP_SSE), 9, 1);
  d.step();
  CHECK_FALSE(same(c.globals(), d.globals()));
}

TEST_CASE("feature update without subject effects equals the SSE update at delta = 0") {
  const Dataset ds = small_dataset(2, 5, 13);
  Sampler base(ds, spec_of(Variant::Base), 3, 0);
  Sampler sse(ds, spec_of(Variant::SSE), 3, 0);
  base.update_mu_gamma();
  sse.update_mu_gamma();
  for (int s = 0; s < 4; ++s) {
    CHECK(base.globals().mu[s] == sse.globals().mu[s]);
    CHECK(base.globals().gamma[s] == sse.globals().gamma[s]);
  }
  base.update_delta_sigma();
  for (const auto& im : base.images()) CHECK(im.delta.isZero());
}

TEST_CASE("feature parameters concentrate on the truth with many voxels") {
  const std::size_t n = 40000;
  Stream rng(21, {});
  Eigen::MatrixXd gamma(2, 2);
  gamma << 1.0, 0.4, 0.4, 0.5;
  const Eigen::MatrixXd chol = gamma.llt().matrixL();
  std::array<Eigen::Vector2d, 4> mu{Eigen::Vector2d(0, 1), Eigen::Vector2d(-1, 0.5), Eigen::Vector2d(2, -1),
                                    Eigen::Vector2d(1, 1)};
  std::vector<std::uint8_t> region(n), labels(n);
  Eigen::MatrixXd y(n, 2);
  for (std::size_t j = 0; j < n; ++j) {
    region[j] = j % 2;
    labels[j] = (j / 2) % 2;
    const Eigen::Vector2d z(rng.normal(), rng.normal());
    y.row(static_cast<Eigen::Index>(j)) = (mu[stratum(labels[j], region[j])] + chol * z).transpose();
  }
  Dataset ds;
  ds.feature_names = {"a", "b"};
  ds.images.push_back(line_image("big", region, labels, y));
  Sampler s(ds, spec_of(Variant::Base), 4, 0);
  for (int it = 0; it < 3; ++it) s.step();
  for (int k = 0; k < 4; ++k) {
    CHECK((s.globals().mu[k] - mu[k]).cwiseAbs().maxCoeff() < 0.03);
    CHECK((s.globals().gamma[k] - gamma).cwiseAbs().maxCoeff() < 0.05);
  }
}

TEST_CASE("a stratum without complete voxels follows the prior") {
  const std::size_t n = 40;
  std::vector<std::uint8_t> region(n), labels(n);
  Eigen::MatrixXd y(n, 2);
  Stream rng(31, {});
  for (std::size_t j = 0; j < n; ++j) {
    region[j] = j % 2;
    labels[j] = (j / 2) % 2;
    y(static_cast<Eigen::Index>(j), 0) = rng.normal();
    y(static_cast<Eigen::Index>(j), 1) = rng.normal();
    if (labels[j] == 1 && region[j] == 0) y(static_cast<Eigen::Index>(j), 1) = std::nan("");
  }
  Dataset ds;
  ds.feature_names = {"a", "b"};
  ds.images.push_back(line_image("m", region, labels, y));
  ModelSpec spec = spec_of(Variant::Base);
  spec.hyper.mu_prior_var = 4.0;
  Sampler s(ds, spec, 8, 0);
  std::vector<double> draws, gdiag;
  for (std::size_t it = 0; it < 1000; ++it) {
    s.set_iteration(it);
    s.update_mu_gamma();
    draws.push_back(s.globals().mu[stratum(1, 0)][0]);
    gdiag.push_back(s.globals().gamma[stratum(1, 0)](0, 0));
  }
  const auto ks = oracle::ks_one_sample(draws, [](double x) { return oracle::norm_cdf(x / 2.0); });
  CHECK(ks.p_value > 1e-3);
  // IW(d + 2, I) in d = 2: the diagonal is inverse-gamma(1.5, 0.5)
  double mean_inv = 0.0;
  for (double g : gdiag) mean_inv += 1.0 / g;
  mean_inv /= static_cast<double>(gdiag.size());
  CHECK(mean_inv == doctest::Approx(3.0).epsilon(0.1));
}

TEST_CASE("subject effect follows the ridge formula") {
  const Dataset ds = small_dataset(1, 8, 14);
  ModelSpec spec = spec_of(Variant::SSE);
  Sampler s(ds, spec, 6, 0);
  const Eigen::Index d = ds.dim();
  Globals& g = s.globals();
  const Eigen::MatrixXd sigma = 0.5 * Eigen::MatrixXd::Identity(d, d);
  const auto& st = s.images()[0].stats;
  Eigen::MatrixXd prec = sigma.inverse();
  Eigen::VectorXd lin = Eigen::VectorXd::Zero(d);
  for (int k = 0; k < 4; ++k) {
    if (st[k].count == 0) continue;
    const Eigen::MatrixXd gi = g.gamma[k].inverse();
    prec += st[k].count * gi;
    lin += gi * (st[k].sum - st[k].count * g.mu[k]);
  }
  const Eigen::VectorXd expect = prec.inverse() * lin;
  const Eigen::VectorXd sd = prec.inverse().diagonal().cwiseSqrt();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  const int reps = 4000;
  for (int t = 0; t < reps; ++t) {
    s.set_iteration(static_cast<std::size_t>(t));
    g.sigma = sigma;
    s.update_delta_sigma();
    mean += s.images()[0].delta;
  }
  mean /= reps;
  for (Eigen::Index k = 0; k < d; ++k) CHECK(std::abs(mean[k] - expect[k]) < 5.0 * sd[k] / std::sqrt(reps));

  g.sigma = 1e-10 * Eigen::MatrixXd::Identity(d, d);
  s.update_delta_sigma();
  CHECK(s.images()[0].delta.cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("a vanishing field variance pins the field at zero") {
  const Dataset ds = small_dataset(2, 6, 15);
  ModelSpec spec = spec_of(Variant::NNGP);
  spec.theta_fixed = MaternParams{1e-3, 0.5, 1.0};
  spec.hyper.sigma2_min = 1e-4;
  Sampler s(ds, spec, 2, 0);
  for (int it = 0; it < 5; ++it) s.step();
  for (const auto& im : s.images()) CHECK(im.w.cwiseAbs().maxCoeff() < 0.2);
}

TEST_CASE("dense field draws match the Gaussian conditional for fixed kappa") {
  Coords raw{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(4, 1);
  Dataset ds;
  ds.feature_names = {"f"};
  ds.images.push_back(make_image("q", raw, {0, 0, 1, 1}, y, std::vector<std::uint8_t>{0, 1, 0, 1}));
  ModelSpec spec = spec_of(Variant::FullGP);
  const MaternParams theta{1.5, 0.7, 1.5};
  spec.theta_fixed = theta;
  Sampler s(ds, spec, 3, 0);
  const Eigen::Vector4d kappa(-0.4, 1.2, -0.9, 0.3);
  s.images()[0].kappa = kappa;
  Eigen::Vector4d r;
  for (int j = 0; j < 4; ++j) r[j] = kappa[j] - s.globals().q0[ds.images[0].region[static_cast<std::size_t>(j)]];
  const Eigen::MatrixXd c = oracle::dense_cov(ds.images[0].coords, theta.sigma2, theta.phi, theta.nu);
  const Eigen::MatrixXd gain = c * (c + Eigen::MatrixXd::Identity(4, 4)).inverse();
  const Eigen::Vector4d expect = gain * r;
  const Eigen::MatrixXd post = c - gain * c;
  Eigen::Vector4d mean = Eigen::Vector4d::Zero();
  const int reps = 20000;
  for (int t = 0; t < reps; ++t) {
    s.set_iteration(static_cast<std::size_t>(t));
    s.update_w();
    mean += s.images()[0].w;
  }
  mean /= reps;
  for (int j = 0; j < 4; ++j) CHECK(std::abs(mean[j] - expect[j]) < 5.0 * std::sqrt(post(j, j) / reps));
}

TEST_CASE("NNGP field with all earlier neighbors has the dense stationary law") {
  const std::size_t n = 30;
  const Coords pts = test::random_points(n, 77, 0.0, 10.0);
  std::vector<std::uint8_t> region(n), labels(n);
  for (std::size_t j = 0; j < n; ++j) {
    region[j] = j % 2;
    labels[j] = (j / 2) % 2;
  }
  Dataset ds;
  ds.feature_names = {"f"};
  ds.images.push_back(make_image("n", pts, region, Eigen::MatrixXd::Zero(n, 1), labels));
  const MaternParams theta{1.0, 0.4, 0.5};
  Eigen::VectorXd kappa(static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < kappa.size(); ++j) kappa[j] = labels[static_cast<std::size_t>(j)] ? 0.8 : -0.6;

  // long single-site chain, thinned, against exact joint draws
  auto run = [&](Variant v, std::size_t iters, std::size_t thin) {
    ModelSpec spec = spec_of(v);
    spec.m = n - 1;
    spec.theta_fixed = theta;
    Sampler s(ds, spec, 4, 0);
    s.images()[0].kappa = kappa;
    std::array<std::vector<double>, 3> out;
    for (std::size_t t = 0; t < iters; ++t) {
      s.set_iteration(t);
      s.update_w();
      if (t % thin) continue;
      const Eigen::VectorXd& w = s.images()[0].w;
      out[0].push_back(w[0]);
      out[1].push_back(w[15]);
      out[2].push_back(w.sum());
    }
    return out;
  };
  const auto nngp = run(Variant::NNGP, 40000, 20);
  const auto dense = run(Variant::FullGP, 2000, 1);
  for (int k = 0; k < 3; ++k) {
    const auto ks = oracle::ks_two_sample(nngp[k], dense[k]);
    CHECK_MESSAGE(ks.p_value > 1e-3, "summary " << k << " D = " << ks.statistic);
  }
}

TEST_CASE("a null theta proposal is always accepted") {
  const Dataset ds = small_dataset(2, 6, 16);
  Sampler s(ds, spec_of(Variant::NNGP_SSE), 1, 0);
  s.set_proposal(0, Eigen::MatrixXd::Identity(3, 3), -1e3);
  s.set_proposal(1, Eigen::MatrixXd::Identity(3, 3), -1e3);
  for (int it = 0; it < 20; ++it) {
    s.set_iteration(static_cast<std::size_t>(it));
    s.update_kappa();
    s.update_w();
    CHECK(s.update_theta() == 2);
  }
  CHECK(s.acceptance_rate(0) == 1.0);
  CHECK(s.acceptance_rate(1) == 1.0);
}

TEST_CASE("theta moves keep the prior invariant when kappa carries no label information") {
  const Dataset ds = small_dataset(1, 20, 17);
  ModelSpec spec = spec_of(Variant::NNGP);
  spec.m = 5;
  spec.hyper.sigma2_min = 0.5;
  spec.hyper.sigma2_max = 2.0;
  spec.hyper.phi_min = 0.2;
  spec.hyper.phi_max = 1.0;
  spec.hyper.nu_min = 0.5;
  spec.hyper.nu_max = 2.0;
  spec.theta_init = {1.0, 0.45, 1.0};
  Sampler s(ds, spec, 23, 0);
  std::array<std::vector<double>, 3> trace;
  const std::size_t iters = 40000, burn = 2000, thin = 20;
  for (std::size_t it = 0; it < iters; ++it) {
    s.set_iteration(it);
    // forward draw of (w, kappa) given theta, then the theta moves
    for (auto& im : s.images()) {
      Stream rng(99, {it, im.key});
      im.w = im.field->sample_prior(rng);
      im.eta = im.field->field(im.w, SpatialField::Slot::Current);
      for (Eigen::Index j = 0; j < im.kappa.size(); ++j)
        im.kappa[j] = s.globals().q0[im.region[static_cast<std::size_t>(j)]] + im.eta[j] + rng.normal();
    }
    s.update_theta();
    if (it < burn) {
      if ((it + 1) % defaults::kAdaptWindow == 0) s.adapt();
      if (it + 1 == burn) s.freeze_adaptation();
      continue;
    }
    if (it % thin) continue;
    const auto& t = s.globals().theta;
    trace[0].push_back(std::log(t.sigma2));
    trace[1].push_back(std::log(t.phi));
    trace[2].push_back(std::log(t.nu));
  }
  const std::array<std::pair<double, double>, 3> bounds{
      std::pair{std::log(0.5), std::log(2.0)}, std::pair{std::log(0.2), std::log(1.0)},
      std::pair{std::log(0.5), std::log(2.0)}};
  for (int k = 0; k < 3; ++k) {
    const auto [lo, hi] = bounds[k];
    const auto ks = oracle::ks_one_sample(trace[k], [lo, hi](double x) { return std::clamp((x - lo) / (hi - lo), 0.0, 1.0); });
    CHECK_MESSAGE(ks.p_value > 1e-3, "component " << k << " D = " << ks.statistic);
  }
}

TEST_CASE("fixed theta leaves the trace constant") {
  const Dataset ds = small_dataset(2, 8, 18);
  ModelSpec spec = spec_of(Variant::RR_SSE);
  spec.theta_fixed = MaternParams{2.0, 0.3, 1.5};
  McmcConfig mc;
  mc.chains = 2;
  mc.iters = 20;
  mc.burnin = 10;
  const ChainSet cs = fit(ds, spec, mc);
  for (const auto& c : cs.chains)
    for (const auto& d : c.draws) CHECK(d.globals.theta == *spec.theta_fixed);
}

TEST_CASE("chain files round-trip exactly") {
  const Dataset ds = small_dataset(2, 8, 19);
  McmcConfig mc;
  mc.chains = 2;
  mc.iters = 6;
  mc.burnin = 3;
  mc.thin = 2;
  const ChainSet cs = fit(ds, spec_of(Variant::NNGP_SSE), mc);
  CHECK(cs.draws_per_chain() == 3);
  const auto path = std::filesystem::temp_directory_path() / "spvc_chain_roundtrip.csv";
  write_chainset(cs, path, {{"note", "\"x\""}});
  const ChainSet back = read_chainset(path);
  std::filesystem::remove(path);
  CHECK(back.spec.variant == Variant::NNGP_SSE);
  CHECK(back.image_ids == cs.image_ids);
  CHECK(back.feature_names == cs.feature_names);
  REQUIRE(back.total_draws() == cs.total_draws());
  for (std::size_t t = 0; t < cs.total_draws(); ++t) CHECK(back.scalars(back.draw(t)) == cs.scalars(cs.draw(t)));
  CHECK(back.scalars(back.from_scalars(cs.scalars(cs.draw(0)))) == cs.scalars(cs.draw(0)));
}

TEST_CASE("split R-hat separates mixed from stuck chains") {
  Stream rng(5, {});
  std::vector<std::vector<double>> good(4), bad(4);
  for (int c = 0; c < 4; ++c)
    for (int t = 0; t < 2000; ++t) {
      const double z = rng.normal();
      good[c].push_back(z);
      bad[c].push_back(z + 3.0 * c);
    }
  CHECK(split_rhat(good) == doctest::Approx(1.0).epsilon(0.01));
  CHECK(split_rhat(bad) > 2.0);
  std::vector<std::vector<double>> trend(2);
  for (int t = 0; t < 2000; ++t) {
    trend[0].push_back(t * 0.01 + rng.normal());
    trend[1].push_back(t * 0.01 + rng.normal());
  }
  CHECK(split_rhat(trend) > 1.5);
}

TEST_CASE("mcmc settings are validated") {
  McmcConfig mc;
  mc.chains = 0;
  mc.thin = 0;
  try {
    mc.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("chains") != std::string::npos);
    CHECK(msg.find("thin") != std::string::npos);
  }
}
