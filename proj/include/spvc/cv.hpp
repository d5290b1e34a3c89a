#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spvc/data_model.hpp"
#include "spvc/metrics.hpp"
#include "spvc/model.hpp"
#include "spvc/predict.hpp"
#include "spvc/sampler.hpp"

namespace spvc {

/// Image-level partition: ids sorted, shuffled with the seed, dealt round-robin.
/// The result does not depend on the input order of the ids.
std::vector<std::vector<std::string>> assign_folds(std::vector<std::string> ids, std::size_t k, std::uint64_t seed);

struct FoldResult {
  std::vector<std::string> test_ids;
  std::optional<ROCSummary> pooled;  // absent when the test labels hold one class
  double per_image_auc = std::nan("");  // mean over test images with both classes
  std::vector<PredictionResult> predictions;
  double runtime_s = 0.0;
  bool flagged() const { return !pooled.has_value(); }
};

struct CvReport {
  std::vector<FoldResult> folds;
  double mean_auc = std::nan("");  // average of pooled per-fold AUC
  double mean_s80 = std::nan("");
  double mean_per_image_auc = std::nan("");
};

/// Pooled ROC over every voxel of the given predictions.
ROCSummary pooled_roc(const std::vector<PredictionResult>& predictions, const std::vector<const VoxelImage*>& images);

/// Fit on k-1 folds, predict the held-out images, score each fold.
CvReport kfold_cv(const Dataset& data, std::size_t k, const ModelSpec& spec, const McmcConfig& mcmc,
                  const PredictConfig& predict, std::uint64_t cv_seed);

/// Predicts every image of `test` (in parallel across images).
std::vector<PredictionResult> predict_dataset(const Dataset& test, const ChainSet& chains, const PredictConfig& config);

}  // namespace spvc
