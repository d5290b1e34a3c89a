#include "spvc/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace spvc {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

double Stream::uniform() {
  // 53 random bits, shifted off zero.
  return ((engine_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

double Stream::chi_squared(double df) {
  std::chi_squared_distribution<double> dist(df);
  return dist(engine_);
}

double truncated_normal_lower(double lower, Stream& rng) {
  if (lower <= 0.0) {
    for (;;) {
      double z = rng.normal();
      if (z >= lower) return z;
    }
  }
  // Robert (1995): exponential proposal with the optimal rate.
  const double rate = 0.5 * (lower + std::sqrt(lower * lower + 4.0));
  for (;;) {
    double z = lower - std::log(rng.uniform()) / rate;
    double t = z - rate;
    if (std::log(rng.uniform()) <= -0.5 * t * t) return z;
  }
}

double sample_probit_latent(double mean, bool positive, Stream& rng) {
  if (positive) {
    for (;;) {
      double k = mean + truncated_normal_lower(-mean, rng);
      if (k > 0.0) return k;
    }
  }
  double k = mean - truncated_normal_lower(mean, rng);
  return k > 0.0 ? 0.0 : k;
}

Eigen::VectorXd standard_normal_vector(Eigen::Index n, Stream& rng) {
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.normal();
  return z;
}

Eigen::MatrixXd sample_wishart(double df, const Eigen::MatrixXd& scale, Stream& rng) {
  const Eigen::Index d = scale.rows();
  if (df <= static_cast<double>(d - 1)) throw std::invalid_argument("wishart: df too small");
  Eigen::LLT<Eigen::MatrixXd> llt(scale);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    a(i, i) = std::sqrt(rng.chi_squared(df - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  Eigen::MatrixXd la = llt.matrixL() * a;
  return la * la.transpose();
}

Eigen::MatrixXd sample_inverse_wishart(double df, const Eigen::MatrixXd& psi, Stream& rng) {
  const Eigen::Index d = psi.rows();
  Eigen::MatrixXd psi_inv = psi.llt().solve(Eigen::MatrixXd::Identity(d, d));
  psi_inv = 0.5 * (psi_inv + psi_inv.transpose());
  Eigen::MatrixXd w = sample_wishart(df, psi_inv, rng);
  Eigen::MatrixXd out = w.llt().solve(Eigen::MatrixXd::Identity(d, d));
  return 0.5 * (out + out.transpose());
}

}  // namespace spvc
