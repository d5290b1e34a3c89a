#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "spvc/errors.hpp"
#include "spvc/predict.hpp"
#include "spvc/simulate.hpp"
#include "spvc_validation/oracles.hpp"
#include "test_helpers.hpp"

using namespace spvc;

namespace {

Globals two_feature_globals() {
  Globals g;
  Eigen::MatrixXd gamma(2, 2);
  gamma << 1.0, 0.3, 0.3, 0.8;
  for (int s = 0; s < 4; ++s) g.gamma[s] = gamma * (1.0 + 0.1 * s);
  g.mu[stratum(0, 0)] = Eigen::Vector2d(0.0, 0.0);
  g.mu[stratum(0, 1)] = Eigen::Vector2d(0.2, -0.1);
  g.mu[stratum(1, 0)] = Eigen::Vector2d(-0.8, 0.7);
  g.mu[stratum(1, 1)] = Eigen::Vector2d(-0.6, 0.9);
  g.sigma = Eigen::MatrixXd::Zero(2, 2);
  g.q0 = {-1.0, -0.4};
  return g;
}

VoxelImage grid_image(std::size_t side, std::uint64_t seed, bool with_missing = false) {
  const Coords raw = test::lattice(side, side);
  Stream rng(seed, {});
  std::vector<std::uint8_t> region(raw.size());
  Eigen::MatrixXd y(static_cast<Eigen::Index>(raw.size()), 2);
  for (std::size_t j = 0; j < raw.size(); ++j) {
    region[j] = (raw[j].x + raw[j].y) < static_cast<double>(side) ? 1 : 0;
    y(static_cast<Eigen::Index>(j), 0) = rng.normal();
    y(static_cast<Eigen::Index>(j), 1) = rng.normal();
  }
  if (with_missing) {
    y(1, 0) = std::nan("");
    y(5, 1) = std::nan("");
    y(7, 0) = y(7, 1) = std::nan("");
  }
  return make_image("t", raw, region, y);
}

ModelSpec spec_of(Variant v) {
  ModelSpec s;
  s.variant = v;
  return s;
}

}  // namespace

TEST_CASE("base predictions follow Bayes' rule with marginal densities for missing features") {
  const Globals g = two_feature_globals();
  const ChainSet cs = fixed_chainset(spec_of(Variant::Base), g, {"a", "b"}, 3);
  const VoxelImage im = grid_image(4, 3, true);
  const PredictionResult r = predict_image(im, cs);
  REQUIRE(r.prob.size() == im.size());
  CHECK(r.draws == 3);
  for (std::size_t j = 0; j < im.size(); ++j) {
    const int reg = im.region[j];
    const Eigen::VectorXd y = im.features.row(static_cast<Eigen::Index>(j)).transpose();
    const double f1 = oracle::gaussian_logpdf_observed(y, g.mu[stratum(1, reg)], g.gamma[stratum(1, reg)]);
    const double f0 = oracle::gaussian_logpdf_observed(y, g.mu[stratum(0, reg)], g.gamma[stratum(0, reg)]);
    const double expect = oracle::bayes_rule(oracle::norm_cdf(g.q0[reg]), f1, f0);
    CHECK(r.prob[j] == doctest::Approx(expect).epsilon(1e-10));
  }
  CHECK(r.prob[7] == doctest::Approx(oracle::norm_cdf(g.q0[im.region[7]])).epsilon(1e-10));
}

TEST_CASE("uninformative features leave the spatial prior prevalence") {
  Globals g = two_feature_globals();
  for (int s = 0; s < 4; ++s) {
    g.mu[s] = Eigen::Vector2d::Zero();
    g.gamma[s] = Eigen::Matrix2d::Identity();
  }
  ModelSpec spec = spec_of(Variant::NNGP);
  spec.m = 5;
  g.theta = {2.0, 0.3, 0.5};
  const ChainSet cs = fixed_chainset(spec, g, {"a", "b"}, 400);
  const VoxelImage im = grid_image(6, 4);
  PredictConfig pc;
  pc.seed = 17;
  const PredictionResult r = predict_image(im, cs, pc);
  // average over voxels of each region against Phi(q0 / sqrt(1 + sigma2))
  for (int reg = 0; reg < 2; ++reg) {
    double sum = 0.0, n = 0.0;
    for (std::size_t j = 0; j < im.size(); ++j)
      if (im.region[j] == reg) {
        sum += r.prob[j];
        n += 1.0;
      }
    CHECK(sum / n == doctest::Approx(oracle::norm_cdf(g.q0[reg] / std::sqrt(3.0))).epsilon(0.05));
  }
}

TEST_CASE("a vanishing field reproduces the base predictions") {
  Globals g = two_feature_globals();
  g.theta = {1e-12, 0.5, 1.0};
  ModelSpec spec = spec_of(Variant::NNGP);
  spec.hyper.sigma2_min = 1e-13;
  const VoxelImage im = grid_image(5, 6);
  const auto base = predict_image(im, fixed_chainset(spec_of(Variant::Base), g, {"a", "b"}, 5));
  const auto nngp = predict_image(im, fixed_chainset(spec, g, {"a", "b"}, 5));
  for (std::size_t j = 0; j < im.size(); ++j) CHECK(nngp.prob[j] == doctest::Approx(base.prob[j]).epsilon(1e-4));
}

TEST_CASE("predictions are equivariant under voxel permutations") {
  Globals g = two_feature_globals();
  g.theta = {1.5, 0.4, 1.0};
  g.sigma = 0.2 * Eigen::MatrixXd::Identity(2, 2);
  ModelSpec spec = spec_of(Variant::NNGP_SSE);
  spec.m = 4;
  const ChainSet cs = fixed_chainset(spec, g, {"a", "b"}, 6);
  const VoxelImage im = grid_image(5, 8);
  std::vector<std::size_t> perm(im.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 eng(3);
  std::shuffle(perm.begin(), perm.end(), eng);
  const VoxelImage shuffled = subset_image(im, perm);
  const auto a = predict_image(im, cs);
  const auto b = predict_image(shuffled, cs);
  for (std::size_t k = 0; k < perm.size(); ++k) CHECK(b.prob[k] == a.prob[perm[k]]);
}

TEST_CASE("predictions are deterministic and stride over draws") {
  Globals g = two_feature_globals();
  g.theta = {1.0, 0.5, 1.0};
  ModelSpec spec = spec_of(Variant::RR);
  spec.a = 4;
  const ChainSet cs = fixed_chainset(spec, g, {"a", "b"}, 10);
  const VoxelImage im = grid_image(4, 9);
  PredictConfig pc;
  pc.max_draws = 3;
  const auto a = predict_image(im, cs, pc);
  const auto b = predict_image(im, cs, pc);
  CHECK(a.draws == 3);
  CHECK(a.prob == b.prob);
  for (double p : a.prob) CHECK((p >= 0.0 && p <= 1.0));

  pc.inner_burn = pc.inner_sweeps;
  CHECK_THROWS_AS(predict_image(im, cs, pc), ConfigError);
  const VoxelImage wrong = make_image("w", im.raw, im.region, Eigen::MatrixXd::Zero(16, 3));
  CHECK_THROWS_AS(predict_image(wrong, cs), InputError);
}

TEST_CASE("kernel smoothing limits and serial agreement") {
  const Coords s = test::random_points(60, 12);
  std::vector<double> p(s.size());
  Stream rng(2, {});
  for (auto& v : p) v = rng.uniform();
  const auto tiny = smooth_probs(p, s, 1e-6);
  for (std::size_t j = 0; j < p.size(); ++j) CHECK(tiny[j] == doctest::Approx(p[j]).epsilon(1e-12));
  const double mean = std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(p.size());
  const auto wide = smooth_probs(p, s, 1e6);
  for (double v : wide) CHECK(v == doctest::Approx(mean).epsilon(1e-9));
  const auto par = smooth_probs(p, s, 0.3);
  const auto ser = reference::smooth_probs(p, s, 0.3);
  for (std::size_t j = 0; j < p.size(); ++j) CHECK(par[j] == doctest::Approx(ser[j]).epsilon(1e-14));
  const auto flat = smooth_probs(std::vector<double>(s.size(), 0.25), s, 0.3);
  for (double v : flat) CHECK(v == doctest::Approx(0.25).epsilon(1e-14));
  CHECK_THROWS_AS(smooth_probs(p, s, 0.0), InputError);
}

TEST_CASE("smoothing is applied only when the spec asks for it") {
  Globals g = two_feature_globals();
  ModelSpec spec = spec_of(Variant::Base);
  const VoxelImage im = grid_image(4, 10);
  const auto raw = predict_and_smooth(im, fixed_chainset(spec, g, {"a", "b"}, 2));
  spec.smoothing_bandwidth = 0.5;
  const auto smooth = predict_and_smooth(im, fixed_chainset(spec, g, {"a", "b"}, 2));
  CHECK(raw.prob == predict_image(im, fixed_chainset(spec, g, {"a", "b"}, 2)).prob);
  CHECK(smooth.prob == smooth_probs(raw.prob, im.coords, 0.5));
}
