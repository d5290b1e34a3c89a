#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "spvc/covariance.hpp"
#include "spvc/linalg.hpp"
#include "spvc/rng.hpp"

namespace spvc {

/// Largest image the dense model will factor.
inline constexpr std::size_t kDenseLimit = 2000;

/// Cholesky of cov_matrix(S, theta), jittered if needed. Throws InputError
/// above `dense_limit` voxels and NumericalError when factorization fails.
SpdFactor factor_cov(const Coords& s, const MaternParams& theta, std::size_t dense_limit = kDenseLimit);

/// Exact log N(w | 0, C(S,S|theta)).
double gp_logdensity(const Eigen::VectorXd& w, const Coords& s, const MaternParams& theta,
                     std::size_t dense_limit = kDenseLimit);

/// Draw from N(0, C(S,S|theta)); reproducible for a given seed.
Eigen::VectorXd gp_sample(const Coords& s, const MaternParams& theta, std::uint64_t seed,
                          std::size_t dense_limit = kDenseLimit);

/// Draw from N(0, cov) using an existing factor.
Eigen::VectorXd mvn_sample(const SpdFactor& cov, Stream& rng);

}  // namespace spvc
