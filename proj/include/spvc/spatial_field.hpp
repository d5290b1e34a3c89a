#pragma once

#include <memory>

#include <Eigen/Dense>

#include "spvc/data_model.hpp"
#include "spvc/model.hpp"
#include "spvc/rng.hpp"

namespace spvc {

/// Per-image spatial prior used by the sampler and by prediction.
///
/// The latent state is the per-voxel field (NNGP, CAR, dense) or the knot
/// values (RR). Two parameter slots are kept: `Current` holds the factors for
/// the accepted theta, `Pending` those for a proposal, so a rejected
/// Metropolis step costs no rebuild.
class SpatialField {
 public:
  enum class Slot { Current, Pending };

  virtual ~SpatialField() = default;

  virtual std::size_t voxels() const = 0;
  virtual std::size_t state_size() const = 0;

  /// Builds factors for theta into the pending slot.
  virtual void prepare(const MaternParams& theta) = 0;
  /// Promotes the pending slot to current.
  virtual void commit() = 0;
  /// prepare + commit.
  void reset(const MaternParams& theta) {
    prepare(theta);
    commit();
  }

  /// log prior density of the state.
  virtual double log_prior(const Eigen::VectorXd& state, Slot slot) const = 0;
  /// Per-voxel field implied by the state.
  virtual Eigen::VectorXd field(const Eigen::VectorXd& state, Slot slot) const = 0;
  /// True when field() depends on theta (reduced rank).
  virtual bool field_depends_on_theta() const { return false; }

  /// Map to a parameterization whose prior does not depend on theta, and back.
  virtual Eigen::VectorXd standardize(const Eigen::VectorXd& state, Slot slot) const = 0;
  virtual Eigen::VectorXd unstandardize(const Eigen::VectorXd& u, Slot slot) const = 0;

  /// Draws the state from its full conditional given observations
  /// resid_j ~ N(field_j, 1), under the current slot.
  virtual void gibbs(Eigen::VectorXd& state, const Eigen::VectorXd& resid, Stream& rng) const = 0;

  virtual Eigen::VectorXd sample_prior(Stream& rng) const = 0;

  /// Whether the current factors needed diagonal jitter.
  virtual bool jittered() const = 0;
};

/// Builds the field for the spec's spatial kind over one image and sets the
/// current slot to theta. Throws ConfigError for non-spatial variants.
std::unique_ptr<SpatialField> make_spatial_field(const ModelSpec& spec, const Coords& s, const MaternParams& theta);

}  // namespace spvc
