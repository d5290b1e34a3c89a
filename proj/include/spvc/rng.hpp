#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

#include <Eigen/Dense>

namespace spvc {

/// 64-bit FNV-1a; stable across platforms, used for image-id keyed streams
/// and config hashes.
std::uint64_t fnv1a(std::string_view text);

/// Mixes a seed with a sequence of keys (SplitMix64 finalizer per step).
std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

/// A seeded random stream. Streams are cheap to construct, so every
/// (seed, image, iteration) triple gets its own one and results do not depend
/// on thread scheduling.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}
  Stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys)
      : engine_(mix_seed(seed, keys)) {}

  double normal() { return normal_(engine_); }
  /// Uniform on the open interval (0, 1).
  double uniform();
  double chi_squared(double df);
  std::uint64_t next() { return engine_(); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

/// Draws z >= lower from a standard normal truncated below.
/// Uses naive rejection for lower <= 0 and Robert's exponential
/// rejection sampler otherwise, so extreme truncation points stay finite.
double truncated_normal_lower(double lower, Stream& rng);

/// Latent probit draw: kappa ~ N(mean, 1) restricted to (0, inf) when
/// positive is true and to (-inf, 0] otherwise.
double sample_probit_latent(double mean, bool positive, Stream& rng);

Eigen::VectorXd standard_normal_vector(Eigen::Index n, Stream& rng);

/// Wishart(df, scale) by Bartlett decomposition. Requires df > dim - 1.
Eigen::MatrixXd sample_wishart(double df, const Eigen::MatrixXd& scale, Stream& rng);

/// Inverse-Wishart with density proportional to
/// |X|^{-(df+d+1)/2} exp(-tr(psi X^{-1})/2).
Eigen::MatrixXd sample_inverse_wishart(double df, const Eigen::MatrixXd& psi, Stream& rng);

}  // namespace spvc
