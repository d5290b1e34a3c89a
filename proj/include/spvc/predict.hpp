#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spvc/data_model.hpp"
#include "spvc/defaults.hpp"
#include "spvc/model.hpp"
#include "spvc/sampler.hpp"

namespace spvc {

struct PredictConfig {
  std::size_t inner_sweeps = defaults::kInnerSweeps;
  std::size_t inner_burn = defaults::kInnerBurn;
  std::size_t max_draws = 0;  // 0 = every retained draw; otherwise evenly strided
  std::uint64_t seed = defaults::kSeed;

  void validate() const;
};

struct PredictionResult {
  std::string image_id;
  std::vector<double> prob;  // posterior predictive P(c = 1), per voxel
  std::size_t draws = 0;
};

/// Posterior predictive cancer probabilities for an image whose labels are
/// ignored. For every used draw of the globals an inner Gibbs chain over the
/// image's latent labels, spatial field and subject effect is run (warm
/// started from the previous draw); each kept sweep contributes
/// P(c_j = 1 | w, delta, y_j). Voxels are processed in coordinate order, so
/// the result is equivariant under voxel permutations.
PredictionResult predict_image(const VoxelImage& test, const ChainSet& chains, const PredictConfig& config = {});

/// Gaussian-kernel smoothing of probabilities within one image.
std::vector<double> smooth_probs(const std::vector<double>& prob, const Coords& s, double bandwidth);

/// Serial reference for smooth_probs.
namespace reference {
std::vector<double> smooth_probs(const std::vector<double>& prob, const Coords& s, double bandwidth);
}

/// predict_image followed by M-smooth when the spec sets a bandwidth.
PredictionResult predict_and_smooth(const VoxelImage& test, const ChainSet& chains, const PredictConfig& config = {});

}  // namespace spvc
