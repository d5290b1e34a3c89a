#include <cmath>

#include "doctest.h"
#include "spvc/errors.hpp"
#include "spvc/full_gp.hpp"
#include "spvc_validation/oracles.hpp"
#include "test_helpers.hpp"

using namespace spvc;

TEST_CASE("scalar density at zero") {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(1);
  CHECK(gp_logdensity(w, {{0.2, 0.3}}, {1.0, 0.5, 0.5}) == doctest::Approx(-0.5 * std::log(2 * M_PI)).epsilon(1e-14));
}

TEST_CASE("two-point density matches the closed-form 2x2 inverse") {
  const MaternParams theta{2.0, 0.5, 1.5};
  const Coords s{{0, 0}, {0.3, 0.1}};
  const double c12 = 2.0 * oracle::matern_three_halves(std::hypot(0.3, 0.1), 0.5);
  const double det = 4.0 - c12 * c12;
  Eigen::VectorXd w(2);
  w << 0.7, -1.1;
  const double quad = (2.0 * w[0] * w[0] - 2.0 * c12 * w[0] * w[1] + 2.0 * w[1] * w[1]) / det;
  const double expect = -std::log(2 * M_PI) - 0.5 * std::log(det) - 0.5 * quad;
  CHECK(gp_logdensity(w, s, theta) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("density agrees with an eigen-decomposition oracle") {
  const Coords s = test::random_points(40, 5);
  const MaternParams theta{4.0, 0.7, 0.5};
  const Eigen::VectorXd w = gp_sample(s, theta, 1);
  const double ref = oracle::mvn_logdensity_eigen(w, oracle::dense_cov(s, 4.0, 0.7, 0.5));
  CHECK(std::abs(gp_logdensity(w, s, theta) - ref) < 1e-8);
}

TEST_CASE("n = 1 density integrates to one") {
  const double sigma = std::sqrt(2.5);
  const MaternParams theta{2.5, 1.0, 1.0};
  const int steps = 20000;
  const double lo = -10 * sigma, h = 20 * sigma / steps;
  double s = 0.0;
  for (int i = 0; i <= steps; ++i) {
    Eigen::VectorXd w(1);
    w << lo + i * h;
    const double wt = (i == 0 || i == steps) ? 0.5 : 1.0;
    s += wt * std::exp(gp_logdensity(w, {{0, 0}}, theta));
  }
  CHECK(std::abs(s * h - 1.0) < 1e-6);
}

TEST_CASE("sampling: tiny variance, determinism, moments") {
  const Coords s{{0, 0}, {0.2, 0.1}, {-0.3, 0.4}};
  CHECK(gp_sample(s, {1e-12, 0.5, 0.5}, 3).cwiseAbs().maxCoeff() < 1e-4);
  CHECK(gp_sample(s, {1.0, 0.5, 0.5}, 3) == gp_sample(s, {1.0, 0.5, 0.5}, 3));

  const MaternParams theta{2.0, 0.5, 1.5};
  const int draws = 20000;
  Eigen::MatrixXd x(draws, 3);
  const SpdFactor f = factor_cov(s, theta);
  Stream rng(99);
  for (int i = 0; i < draws; ++i) x.row(i) = mvn_sample(f, rng).transpose();
  const Eigen::MatrixXd emp = oracle::empirical_cov(x);
  const Eigen::MatrixXd c = oracle::dense_cov(s, 2.0, 0.5, 1.5);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const double se = std::sqrt((c(a, b) * c(a, b) + c(a, a) * c(b, b)) / draws);
      CHECK(std::abs(emp(a, b) - c(a, b)) < 3 * se);
    }
}

TEST_CASE("average log density of draws matches its expectation") {
  const Coords s = test::random_points(8, 44);
  const MaternParams theta{1.5, 0.6, 0.5};
  const SpdFactor f = factor_cov(s, theta);
  Stream rng(4);
  const int draws = 4000;
  double acc = 0.0, acc2 = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double l = mvn_logdensity(mvn_sample(f, rng), f);
    acc += l;
    acc2 += l * l;
  }
  const double mean = acc / draws;
  const double sd = std::sqrt(acc2 / draws - mean * mean);
  const double expect = -0.5 * 8 * (1 + std::log(2 * M_PI)) - 0.5 * f.log_det();
  CHECK(std::abs(mean - expect) < 4 * sd / std::sqrt(double(draws)));
}

TEST_CASE("dense limit guards large images") {
  const Coords s = test::random_points(30, 1);
  CHECK_THROWS_AS(gp_logdensity(Eigen::VectorXd::Zero(30), s, {1, 1, 1}, 20), InputError);
}
