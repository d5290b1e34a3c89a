#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "spvc/covariance.hpp"
#include "spvc/linalg.hpp"
#include "spvc/rng.hpp"

namespace spvc {

/// Knot voxels for a predictive-process approximation: a regular rows x cols
/// grid (rows the largest divisor of a not above sqrt(a), the longer side
/// along the wider axis) over the bounding box, each grid point snapped to the
/// nearest voxel not already taken. a = 1 uses the voxel nearest the centroid.
std::vector<std::size_t> select_knots(const Coords& s, std::size_t a);

/// Knot structure under one theta.
struct KnotSet {
  std::vector<std::size_t> index;  // knot voxels
  Coords coords;
  Eigen::MatrixXd knot_cov;  // C(S*, S*)
  SpdFactor knot_factor;
  Eigen::MatrixXd interp;  // C(S, S*) C(S*, S*)^{-1}, n x a

  std::size_t rank() const { return index.size(); }
};

KnotSet make_knot_set(const Coords& s, const std::vector<std::size_t>& knot_index, const MaternParams& theta);

/// Kriging weights of every voxel onto the knots (n x a).
Eigen::MatrixXd rr_interpolate(const Coords& s, const KnotSet& knots, const MaternParams& theta);

/// Rank-a covariance C(S,S*) C(S*)^{-1} C(S*,S).
Eigen::MatrixXd rr_cov(const Coords& s, const KnotSet& knots, const MaternParams& theta);

/// Knot values w* ~ N(0, C(S*)).
Eigen::VectorXd rr_sample_knots(const KnotSet& knots, Stream& rng);
/// Interpolated field interp * w* for a fresh knot draw.
Eigen::VectorXd rr_sample(const KnotSet& knots, std::uint64_t seed);
/// log N(w* | 0, C(S*)).
double rr_logdensity(const Eigen::VectorXd& knot_values, const KnotSet& knots);

/// Distance cache for repeated KnotSet builds over one image.
class RRGeometry {
 public:
  RRGeometry(const Coords& s, std::vector<std::size_t> knot_index);
  KnotSet build(const MaternParams& theta) const;
  std::size_t size() const { return n_; }
  std::size_t rank() const { return index_.size(); }

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> index_;
  Coords knot_coords_;
  DistanceTable table_;
  std::vector<std::size_t> knot_slots_;   // a x a, row-major
  std::vector<std::size_t> cross_slots_;  // n x a, row-major
};

}  // namespace spvc
