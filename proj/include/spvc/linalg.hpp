#pragma once

#include <Eigen/Dense>

namespace spvc {

/// Cholesky factor of a symmetric positive definite matrix. If the plain
/// factorization fails, 1e-8 * jitter_scale is added to the diagonal once and
/// `jittered` is set.
struct SpdFactor {
  Eigen::LLT<Eigen::MatrixXd> llt;
  bool jittered = false;

  double log_det() const;
  Eigen::MatrixXd matrix_l() const { return llt.matrixL(); }
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return llt.solve(b); }
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const { return llt.solve(b); }
  Eigen::MatrixXd inverse() const;
};

inline constexpr double kJitter = 1e-8;

/// Throws NumericalError when the matrix is not SPD even after jitter.
SpdFactor factor_spd(const Eigen::MatrixXd& a, double jitter_scale);

/// log N(x | 0, A) given the factor of A.
double mvn_logdensity(const Eigen::VectorXd& x, const SpdFactor& cov);

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

}  // namespace spvc
