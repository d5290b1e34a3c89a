#include "spvc/full_gp.hpp"

#include <string>

#include "spvc/errors.hpp"

namespace spvc {

SpdFactor factor_cov(const Coords& s, const MaternParams& theta, std::size_t dense_limit) {
  if (s.size() > dense_limit) {
    throw InputError("dense GP limited to " + std::to_string(dense_limit) + " voxels, got " +
                     std::to_string(s.size()));
  }
  return factor_spd(cov_matrix(s, theta), theta.sigma2);
}

double gp_logdensity(const Eigen::VectorXd& w, const Coords& s, const MaternParams& theta,
                     std::size_t dense_limit) {
  if (static_cast<std::size_t>(w.size()) != s.size())
    throw InputError("gp_logdensity: field length does not match coordinates");
  return mvn_logdensity(w, factor_cov(s, theta, dense_limit));
}

Eigen::VectorXd mvn_sample(const SpdFactor& cov, Stream& rng) {
  const Eigen::Index n = cov.llt.matrixLLT().rows();
  return cov.llt.matrixL() * standard_normal_vector(n, rng);
}

Eigen::VectorXd gp_sample(const Coords& s, const MaternParams& theta, std::uint64_t seed,
                          std::size_t dense_limit) {
  Stream rng(seed);
  return mvn_sample(factor_cov(s, theta, dense_limit), rng);
}

}  // namespace spvc
