#include <cmath>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "spvc/car.hpp"
#include "spvc/errors.hpp"
#include "spvc_validation/oracles.hpp"
#include "test_helpers.hpp"

using namespace spvc;

TEST_CASE("precision is symmetric positive definite") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Coords s = test::random_points(10 + 3 * seed, 40 + seed);
    const auto wts = car_weights(s);
    for (double alpha : {0.5, 0.9, 0.99}) {
      const auto p = car_precision(wts, 1.7, alpha);
      const Eigen::MatrixXd q = Eigen::MatrixXd(p.precision());
      CHECK((q - q.transpose()).cwiseAbs().maxCoeff() == 0.0);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q, Eigen::EigenvaluesOnly);
      CHECK(es.eigenvalues().minCoeff() > 0.0);
      CHECK(p.log_det() == doctest::Approx(es.eigenvalues().array().log().sum()).epsilon(1e-10));
    }
  }
}

TEST_CASE("conditional moments match the joint covariance") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Coords s = test::random_points(4, 900 + seed);
    const auto wts = car_weights(s);
    const double alpha = 0.9, sigma2 = 2.5;
    const auto p = car_precision(wts, sigma2, alpha);
    const Eigen::MatrixXd cov = Eigen::MatrixXd(p.precision()).inverse();
    const Eigen::MatrixXd w = Eigen::MatrixXd(wts.w);
    Eigen::Vector4d x(0.3, -1.0, 0.5, 2.0);
    for (int j = 0; j < 4; ++j) {
      // Schur complement on the joint covariance
      Eigen::MatrixXd rest(3, 3);
      Eigen::VectorXd cross(3), xr(3);
      for (int a = 0, ia = 0; a < 4; ++a) {
        if (a == j) continue;
        cross[ia] = cov(j, a);
        xr[ia] = x[a];
        for (int b = 0, ib = 0; b < 4; ++b) {
          if (b == j) continue;
          rest(ia, ib++) = cov(a, b);
        }
        ++ia;
      }
      const Eigen::VectorXd g = rest.ldlt().solve(cross);
      const double mean_joint = g.dot(xr), var_joint = cov(j, j) - cross.dot(g);
      double mean_cond = 0.0;
      for (int k = 0; k < 4; ++k) mean_cond += alpha * w(j, k) * x[k] / wts.d[j];
      CHECK(std::abs(mean_joint - mean_cond) <= 1e-10);
      CHECK(std::abs(var_joint - sigma2 / wts.d[j]) <= 1e-10);
    }
  }
}

TEST_CASE("weights, cutoff and degenerate inputs") {
  const Coords s = test::lattice(3, 3, 1.0);
  const auto all = car_weights(s);
  CHECK(all.w.nonZeros() == 72);
  const auto near = car_weights(s, 1.0);
  CHECK(near.w.nonZeros() == 24);
  CHECK(near.d[4] == doctest::Approx(4.0));
  CHECK_THROWS_AS(car_weights({{0, 0}}), InputError);
  CHECK_THROWS_AS(car_weights({{0, 0}, {5, 5}}, 1.0), InputError);
  CHECK_THROWS_AS(car_precision(all, 1.0, 1.0), InputError);
  const auto rn = Eigen::MatrixXd(all.row_normalized());
  CHECK((rn.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-14);
}

TEST_CASE("sample covariance and density agree with the dense oracle") {
  const Coords s = test::random_points(5, 8);
  const auto p = car_precision(car_weights(s), 1.3, 0.9);
  const Eigen::MatrixXd cov = Eigen::MatrixXd(p.precision()).inverse();
  const Eigen::VectorXd x = car_sample(p, 11);
  CHECK(car_logdensity(x, p) == doctest::Approx(oracle::mvn_logdensity_eigen(x, cov)).epsilon(1e-10));
  Stream rng(12);
  const int draws = 30000;
  Eigen::MatrixXd d(draws, 5);
  for (int i = 0; i < draws; ++i) d.row(i) = car_sample(p, rng).transpose();
  const Eigen::MatrixXd emp = oracle::empirical_cov(d);
  for (int j = 0; j < 5; ++j) CHECK(std::abs(emp(j, j) / cov(j, j) - 1.0) < 0.05);
}

TEST_CASE("gibbs sweep targets the Gaussian posterior") {
  const Coords s{{0, 0}, {0.3, 0}, {0, 0.4}};
  const auto p = car_precision(car_weights(s), 1.0, 0.7);
  Eigen::VectorXd r(3);
  r << 1.0, -0.5, 0.2;
  const double tau = 1.5;
  const Eigen::MatrixXd v = (Eigen::MatrixXd(p.precision()) + tau * Eigen::MatrixXd::Identity(3, 3)).inverse();
  const Eigen::VectorXd mean = v * r * tau;
  Stream rng(2);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(3), acc = Eigen::VectorXd::Zero(3);
  const int iters = 40000;
  for (int i = 0; i < iters; ++i) {
    car_gibbs_sweep(p, w, r, tau, rng);
    acc += w;
  }
  for (int j = 0; j < 3; ++j) CHECK(std::abs(acc[j] / iters - mean[j]) < 0.03);
}
