#pragma once

#include <vector>

#include <Eigen/Dense>

#include "spvc/data_model.hpp"

namespace spvc {

/// Spatial parameter set: variance, range and smoothness, all > 0.
struct MaternParams {
  double sigma2 = 1.0;
  double phi = 0.5;
  double nu = 0.5;

  /// Throws InputError unless all three are finite and strictly positive.
  void validate() const;
  friend bool operator==(const MaternParams&, const MaternParams&) = default;
};

/// Matern correlation
///   rho(d) = (x^nu K_nu(x)) / (2^(nu-1) Gamma(nu)),  x = 2 sqrt(nu) d / phi,
/// with rho(0) = 1. Closed forms are used for nu = 0.5 and nu = 1.5.
double matern_corr(double dist, double phi, double nu);

inline double matern_cov(double dist, const MaternParams& theta) {
  return theta.sigma2 * matern_corr(dist, theta.phi, theta.nu);
}

/// Dense covariance sigma2 * rho(|s_j - s_k|). Rows are filled in parallel.
/// Throws InputError on duplicate coordinates.
Eigen::MatrixXd cov_matrix(const Coords& s, const MaternParams& theta);

/// Cross covariance between two point sets (rows follow `a`).
Eigen::MatrixXd cross_cov(const Coords& a, const Coords& b, const MaternParams& theta);

/// Deduplicated distance list. Repeated lattice distances collapse onto one
/// entry, so a parameter change costs one kernel evaluation per distinct
/// distance. Values within 1e-12 (relative) of each other are merged.
class DistanceTable {
 public:
  /// Returns the slot of `d`, adding it if new. Only valid before `freeze`.
  std::size_t add(double d);
  void freeze();
  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  /// Slot for a distance that was previously added.
  std::size_t slot(std::size_t token) const { return remap_[token]; }
  /// Covariance for every distinct distance (kernel evaluated once each).
  std::vector<double> covariances(const MaternParams& theta) const;

 private:
  std::vector<double> raw_;
  std::vector<double> values_;
  std::vector<std::size_t> remap_;
};

namespace reference {

/// Serial reference for cov_matrix; kept for tests and benchmarks.
Eigen::MatrixXd cov_matrix(const Coords& s, const MaternParams& theta);

}  // namespace reference

}  // namespace spvc
