#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "spvc/defaults.hpp"

namespace spvc {

struct ROCSummary {
  double auc = 0.0;
  double s80 = 0.0;
  std::vector<std::pair<double, double>> curve;  // (fpr, tpr), from (0,0) to (1,1)
};

/// ROC curve over all distinct thresholds, AUC from average ranks (ties
/// count one half) and sensitivity at 80% specificity by linear
/// interpolation. Throws InputError unless both classes are present.
ROCSummary roc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels);

/// Sensitivity at the given false positive rate, linearly interpolated on a
/// monotone curve. On a vertical segment at exactly `fpr`, its top is used.
double sensitivity_at(const std::vector<std::pair<double, double>>& curve, double fpr);

/// Smallest threshold t such that classifying score >= t as positive has
/// specificity at least `specificity` on the given data.
double threshold_at_specificity(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels,
                                double specificity = defaults::kSpecificity);

}  // namespace spvc
