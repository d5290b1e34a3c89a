#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "spvc/covariance.hpp"
#include "spvc/rng.hpp"

namespace spvc {

/// Directed acyclic conditioning graph. Position k in `order` holds voxel
/// `order[k]`; `neighbors[k]` lists the (original) indices of the voxels it is
/// conditioned on, all earlier in the order, nearest first.
struct NeighborGraph {
  std::vector<std::size_t> order;
  std::vector<std::vector<std::size_t>> neighbors;
  std::size_t m = 0;

  std::size_t size() const { return order.size(); }
};

/// Lexicographic order: x first, then y. Stable.
std::vector<std::size_t> order_voxels(const Coords& s);

/// Neighbor sets over already-ordered coordinates: position j conditions on
/// the min(j, m) nearest earlier positions, ties broken by smaller index.
NeighborGraph build_neighbors(const Coords& ordered, std::size_t m);

/// order_voxels followed by build_neighbors, with indices mapped back to `s`.
NeighborGraph make_neighbor_graph(const Coords& s, std::size_t m);

/// Kriging weights B and conditional variances F for each ordered position.
struct NNGPFactor {
  std::shared_ptr<const NeighborGraph> graph;
  std::vector<std::vector<double>> b;
  std::vector<double> f;
  bool jittered = false;
};

/// Per-graph geometry: every pairwise distance the factors need, stored in a
/// DistanceTable so a parameter update costs one kernel call per distinct
/// distance. Also holds the child lists used by single-site Gibbs updates.
class NNGPGeometry {
 public:
  NNGPGeometry(std::shared_ptr<const NeighborGraph> graph, const Coords& s);

  /// Factors for theta; kriging systems solved in parallel over voxels.
  NNGPFactor factors(const MaternParams& theta) const;

  const NeighborGraph& graph() const { return *graph_; }
  std::shared_ptr<const NeighborGraph> graph_ptr() const { return graph_; }

  /// children(v): (position t, slot l) pairs with graph.neighbors[t][l] == v.
  const std::vector<std::pair<std::size_t, std::size_t>>& children(std::size_t v) const {
    return children_[v];
  }
  /// Position of voxel v in the order.
  std::size_t position(std::size_t v) const { return position_[v]; }

  /// Covariance for every distinct distance in the table.
  std::vector<double> covariances(const MaternParams& theta) const { return table_.covariances(theta); }

  /// Solves one kriging system; shared by the parallel and serial paths.
  void factor_at(std::size_t k, const std::vector<double>& cov, double sigma2,
                 std::vector<double>& b, double& f, bool& jittered) const;

 private:
  std::shared_ptr<const NeighborGraph> graph_;
  DistanceTable table_;
  // Per position: slots of neighbor-neighbor distances (packed lower triangle)
  // followed by voxel-neighbor distances.
  std::vector<std::vector<std::size_t>> pair_slots_;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> children_;
  std::vector<std::size_t> position_;
};

NNGPFactor nngp_factors(std::shared_ptr<const NeighborGraph> graph, const Coords& s,
                        const MaternParams& theta);

/// Sum over positions of log N(w_j | B_j w_N(j), F_j). `w` is in voxel order.
double nngp_logdensity(const Eigen::VectorXd& w, const NNGPFactor& factors);

/// Ancestral draw w_j = B_j w_N(j) + sqrt(F_j) z_j.
Eigen::VectorXd nngp_sample(const NNGPFactor& factors, std::uint64_t seed);
Eigen::VectorXd nngp_sample(const NNGPFactor& factors, Stream& rng);

/// (I - B)^T F^{-1} (I - B) in voxel order.
Eigen::SparseMatrix<double> nngp_precision(const NNGPFactor& factors);

/// Off-diagonal structural nonzeros of a sparse matrix (both triangles).
std::size_t offdiag_nonzeros(const Eigen::SparseMatrix<double>& a);

/// Whitened residuals z_j = (w_j - B_j w_N(j)) / sqrt(F_j), in order positions.
Eigen::VectorXd nngp_whiten(const Eigen::VectorXd& w, const NNGPFactor& factors);
/// Inverse of nngp_whiten.
Eigen::VectorXd nngp_color(const Eigen::VectorXd& z, const NNGPFactor& factors);

/// One single-site Gibbs sweep over w under the NNGP prior and independent
/// Gaussian observations resid_j ~ N(w_j, 1 / noise_precision).
void nngp_gibbs_sweep(const NNGPGeometry& geometry, const NNGPFactor& factors, Eigen::VectorXd& w,
                      const Eigen::VectorXd& resid, double noise_precision, Stream& rng);

namespace reference {

/// Serial reference for NNGPGeometry::factors.
NNGPFactor nngp_factors(const NNGPGeometry& geometry, const MaternParams& theta);

/// Serial reference for build_neighbors.
NeighborGraph build_neighbors(const Coords& ordered, std::size_t m);

}  // namespace reference

}  // namespace spvc
