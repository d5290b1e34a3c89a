#include <cmath>

#include "doctest.h"
#include "spvc/rng.hpp"
#include "spvc_validation/oracles.hpp"

using namespace spvc;

TEST_CASE("probit latent draws respect the sign and the half-normal mean") {
  Stream rng(11);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double k = sample_probit_latent(0.0, true, rng);
    REQUIRE(k > 0.0);
    sum += k;
  }
  // sqrt(2/pi) with sd 0.6028/sqrt(n)
  CHECK(std::abs(sum / n - std::sqrt(2.0 / M_PI)) < 4 * 0.6028 / std::sqrt(double(n)));
}

TEST_CASE("extreme truncation stays finite") {
  Stream rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double k = sample_probit_latent(8.0, false, rng);
    CHECK(std::isfinite(k));
    CHECK(k <= 0.0);
    const double k2 = sample_probit_latent(-40.0, true, rng);
    CHECK(std::isfinite(k2));
    CHECK(k2 > 0.0);
  }
}

TEST_CASE("truncated normal matches its CDF") {
  Stream rng(5);
  for (double lower : {-1.0, 0.3, 2.5}) {
    std::vector<double> x;
    for (int i = 0; i < 20000; ++i) x.push_back(truncated_normal_lower(lower, rng));
    const double tail = 1.0 - oracle::norm_cdf(lower);
    auto ks = oracle::ks_one_sample(x, [&](double v) { return (oracle::norm_cdf(v) - oracle::norm_cdf(lower)) / tail; });
    CHECK(ks.p_value > 1e-3);
  }
}

TEST_CASE("streams are deterministic and key-sensitive") {
  Stream a(7, {1, 2, 3}), b(7, {1, 2, 3}), c(7, {1, 2, 4});
  const auto va = a.next();
  CHECK(va == b.next());
  CHECK(va != c.next());
}

TEST_CASE("inverse-Wishart mean is psi / (df - d - 1)") {
  Stream rng(9);
  Eigen::MatrixXd psi(2, 2);
  psi << 2.0, 0.5, 0.5, 1.0;
  const double df = 10.0;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(2, 2);
  const int n = 20000;
  for (int i = 0; i < n; ++i) acc += sample_inverse_wishart(df, psi, rng);
  acc /= n;
  const Eigen::MatrixXd expect = psi / (df - 2 - 1);
  CHECK((acc - expect).cwiseAbs().maxCoeff() < 0.02);
}
