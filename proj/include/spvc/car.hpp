#pragma once

#include <cstdint>
#include <memory>
#include <optional>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "spvc/data_model.hpp"
#include "spvc/rng.hpp"

namespace spvc {

/// Inverse-distance weights W (zero diagonal, optionally truncated beyond
/// `cutoff`) and their row sums D.
struct CarWeights {
  Eigen::SparseMatrix<double> w;
  Eigen::VectorXd d;

  /// Row-normalized weights b_jk = W_jk / D_jj.
  Eigen::SparseMatrix<double> row_normalized() const;
};

/// Throws InputError when a voxel has no neighbor (a single-voxel image, or
/// every other voxel beyond the cutoff).
CarWeights car_weights(const Coords& s, std::optional<double> cutoff = std::nullopt);

/// Proper CAR prior with precision P = (D - alpha W) / sigma2.
/// The unscaled matrix D - alpha W and its log-determinant are kept so that a
/// change of sigma2 costs nothing.
struct CARPrecision {
  CarWeights weights;
  double alpha = 0.99;
  double sigma2 = 1.0;
  Eigen::SparseMatrix<double> unscaled;  // D - alpha W
  double log_det_unscaled = 0.0;
  std::shared_ptr<const Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>> factor;  // of `unscaled`

  Eigen::SparseMatrix<double> precision() const { return unscaled / sigma2; }
  double log_det() const {
    return log_det_unscaled - static_cast<double>(unscaled.rows()) * std::log(sigma2);
  }
  /// w^T (D - alpha W) w.
  double quadratic_unscaled(const Eigen::VectorXd& w) const;
};

/// Requires alpha in (0,1) and sigma2 > 0; NumericalError if D - alpha W
/// fails to factor.
CARPrecision car_precision(const CarWeights& weights, double sigma2, double alpha);

double car_logdensity(const Eigen::VectorXd& w, const CARPrecision& p);

Eigen::VectorXd car_sample(const CARPrecision& p, std::uint64_t seed);
Eigen::VectorXd car_sample(const CARPrecision& p, Stream& rng);

/// Single-site Gibbs sweep under the CAR prior with Gaussian observations
/// resid_j ~ N(w_j, 1 / noise_precision).
void car_gibbs_sweep(const CARPrecision& p, Eigen::VectorXd& w, const Eigen::VectorXd& resid,
                     double noise_precision, Stream& rng);

}  // namespace spvc
