#include <cmath>
#include <random>

#include "doctest.h"
#include "spvc/covariance.hpp"
#include "spvc/errors.hpp"
#include "spvc_validation/oracles.hpp"
#include "test_helpers.hpp"

using namespace spvc;

TEST_CASE("matern_corr is one at zero distance") {
  for (double nu : {0.3, 0.5, 1.0, 1.5, 4.0, 29.0}) CHECK(matern_corr(0.0, 0.7, nu) == 1.0);
}

TEST_CASE("matern_corr closed forms at nu = 0.5 and 1.5") {
  CHECK(matern_corr(0.04, 0.5, 0.5) == doctest::Approx(0.8930282309586327).epsilon(1e-14));
  CHECK(matern_corr(0.2, 0.5, 1.5) == doctest::Approx(0.7431910456060045).epsilon(1e-14));
}

TEST_CASE("general-nu path agrees with the half-integer closed forms") {
  // nudge nu off the fast path by one ulp-scale step
  std::mt19937_64 eng(4);
  std::uniform_real_distribution<double> ud(1e-4, 2.0), up(0.05, 3.0);
  for (int i = 0; i < 200; ++i) {
    const double d = ud(eng), phi = up(eng);
    CHECK(std::abs(matern_corr(d, phi, std::nextafter(0.5, 1.0)) - oracle::matern_half(d, phi)) < 1e-10);
    CHECK(std::abs(matern_corr(d, phi, std::nextafter(1.5, 2.0)) - oracle::matern_three_halves(d, phi)) < 1e-10);
  }
}

TEST_CASE("nu = 1 matches quadrature of the Bessel integral") {
  // frozen from an independent evaluation of x K_1(x), x = 4d
  const double frozen[][2] = {{0.05, 0.9551945086440944}, {0.3, 0.5215108692728581},
                              {1.0, 0.04993399554907372}, {2.0, 0.0012429536944400092}};
  for (const auto& row : frozen) {
    CHECK(std::abs(matern_corr(row[0], 0.5, 1.0) - row[1]) < 1e-9);
    CHECK(std::abs(oracle::matern_corr_quadrature(row[0], 0.5, 1.0) - row[1]) < 1e-9);
  }
  for (double d = 0.01; d <= 2.0; d += 0.0737)
    CHECK(std::abs(matern_corr(d, 0.5, 1.0) - oracle::matern_corr_quadrature(d, 0.5, 1.0)) < 1e-9);
}

TEST_CASE("other smoothness values match quadrature") {
  for (double nu : {0.25, 0.88, 2.7, 15.89}) {
    for (double d : {0.01, 0.1, 0.6, 1.9}) {
      CHECK(std::abs(matern_corr(d, 0.71, nu) - oracle::matern_corr_quadrature(d, 0.71, nu)) < 1e-9);
    }
  }
}

TEST_CASE("matern_corr decreases in distance and increases in range") {
  for (double nu : {0.5, 0.9, 1.5, 3.0}) {
    double prev = 1.0;
    for (double d = 0.01; d < 2.0; d += 0.01) {
      const double r = matern_corr(d, 0.5, nu);
      CHECK(r < prev);
      CHECK(r > 0.0);
      CHECK(matern_corr(d, 0.8, nu) > r);
      prev = r;
    }
  }
}

TEST_CASE("large smoothness and tiny distances stay finite") {
  CHECK(matern_corr(1e-9, 1.0, 30.0) == doctest::Approx(1.0));
  CHECK(matern_corr(5.0, 0.01, 30.0) == 0.0);
  CHECK_THROWS_AS(matern_corr(-1.0, 1.0, 1.0), InputError);
  CHECK_THROWS_AS(matern_corr(NAN, 1.0, 1.0), InputError);
  CHECK_THROWS_AS(matern_corr(1.0, 1.0, 0.0), InputError);
}

TEST_CASE("cov_matrix entries, symmetry and duplicates") {
  const MaternParams theta{5.0, 0.5, 0.5};
  const auto one = cov_matrix({{0.1, 0.2}}, theta);
  CHECK(one.rows() == 1);
  CHECK(one(0, 0) == 5.0);
  const auto two = cov_matrix({{0, 0}, {0.04, 0}}, theta);
  CHECK(two(0, 1) == doctest::Approx(4.465141154793163).epsilon(1e-14));
  const Coords pts = test::random_points(60, 8);
  const auto c = cov_matrix(pts, {2.0, 0.3, 1.2});
  CHECK(c == c.transpose());
  CHECK((c.diagonal().array() == 2.0).all());
  CHECK_THROWS_AS(cov_matrix({{0, 0}, {0, 0}}, theta), InputError);
}

TEST_CASE("n = 100 random points factor with at most 1e-8 sigma2 jitter") {
  const Coords pts = test::random_points(100, 21);
  const MaternParams theta{3.0, 0.5, 1.5};
  Eigen::MatrixXd c = cov_matrix(pts, theta);
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) {
    c.diagonal().array() += 1e-8 * theta.sigma2;
    llt.compute(c);
  }
  CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("parallel cov_matrix equals the serial reference bit for bit") {
  const Coords pts = test::random_points(150, 2);
  const MaternParams theta{1.7, 0.4, 0.9};
  CHECK(cov_matrix(pts, theta) == reference::cov_matrix(pts, theta));
}

TEST_CASE("distance table merges repeated lattice distances") {
  DistanceTable t;
  const auto a = t.add(0.5), b = t.add(0.25), c = t.add(0.5 + 1e-15), d = t.add(0.75);
  t.freeze();
  CHECK(t.size() == 3);
  CHECK(t.slot(a) == t.slot(c));
  CHECK(t.slot(b) == 0);
  CHECK(t.slot(d) == 2);
  const auto cov = t.covariances({2.0, 0.5, 0.5});
  CHECK(cov[t.slot(a)] == matern_cov(0.5, {2.0, 0.5, 0.5}));
}
