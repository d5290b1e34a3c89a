#include "spvc/cv.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>

#include "spvc/errors.hpp"
#include "spvc/rng.hpp"

namespace spvc {

std::vector<std::vector<std::string>> assign_folds(std::vector<std::string> ids, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("cross-validation needs at least 2 folds");
  if (k > ids.size()) throw ConfigError("more folds than images");
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw InputError("duplicate image ids");
  Stream rng(seed, {0x6376u});
  for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.next() % i]);
  std::vector<std::vector<std::string>> folds(k);
  for (std::size_t i = 0; i < ids.size(); ++i) folds[i % k].push_back(ids[i]);
  return folds;
}

ROCSummary pooled_roc(const std::vector<PredictionResult>& predictions, const std::vector<const VoxelImage*>& images) {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const VoxelImage& im = *images.at(i);
    if (!im.labeled()) throw InputError("image " + im.id + " has no labels to score against");
    scores.insert(scores.end(), predictions[i].prob.begin(), predictions[i].prob.end());
    labels.insert(labels.end(), im.labels->begin(), im.labels->end());
  }
  return roc(scores, labels);
}

std::vector<PredictionResult> predict_dataset(const Dataset& test, const ChainSet& chains, const PredictConfig& config) {
  std::vector<PredictionResult> out(test.images.size());
  std::vector<std::exception_ptr> errors(test.images.size());
  const auto n = static_cast<std::ptrdiff_t>(test.images.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = predict_and_smooth(test.images[static_cast<std::size_t>(i)], chains, config);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

CvReport kfold_cv(const Dataset& data, std::size_t k, const ModelSpec& spec, const McmcConfig& mcmc,
                  const PredictConfig& predict, std::uint64_t cv_seed) {
  data.validate();
  std::vector<std::string> ids;
  for (const auto& im : data.images) ids.push_back(im.id);
  const auto folds = assign_folds(ids, k, cv_seed);

  CvReport report;
  double auc_sum = 0.0, s80_sum = 0.0, img_sum = 0.0;
  std::size_t scored = 0, img_scored = 0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto start = std::chrono::steady_clock::now();
    Dataset train, test;
    train.feature_names = test.feature_names = data.feature_names;
    for (const auto& im : data.images) {
      const bool held = std::find(folds[f].begin(), folds[f].end(), im.id) != folds[f].end();
      (held ? test : train).images.push_back(im);
    }
    std::sort(test.images.begin(), test.images.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    McmcConfig fold_mcmc = mcmc;
    fold_mcmc.seed = mix_seed(mcmc.seed, {static_cast<std::uint64_t>(f)});
    const ChainSet chains = fit(train, spec, fold_mcmc);

    FoldResult fr;
    fr.test_ids = folds[f];
    std::sort(fr.test_ids.begin(), fr.test_ids.end());
    fr.predictions = predict_dataset(test, chains, predict);
    std::vector<const VoxelImage*> ptrs;
    for (const auto& im : test.images) ptrs.push_back(&im);
    try {
      fr.pooled = pooled_roc(fr.predictions, ptrs);
    } catch (const InputError&) {
      std::cerr << "warning: fold " << f << " has single-class test labels; excluded from the averages\n";
    }
    double s = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < test.images.size(); ++i) {
      try {
        s += roc(fr.predictions[i].prob, *test.images[i].labels).auc;
        ++cnt;
      } catch (const InputError&) {
      }
    }
    if (cnt > 0) {
      fr.per_image_auc = s / static_cast<double>(cnt);
      img_sum += fr.per_image_auc;
      ++img_scored;
    }
    if (fr.pooled) {
      auc_sum += fr.pooled->auc;
      s80_sum += fr.pooled->s80;
      ++scored;
    }
    fr.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.folds.push_back(std::move(fr));
  }
  if (scored > 0) {
    report.mean_auc = auc_sum / static_cast<double>(scored);
    report.mean_s80 = s80_sum / static_cast<double>(scored);
  }
  if (img_scored > 0) report.mean_per_image_auc = img_sum / static_cast<double>(img_scored);
  return report;
}

}  // namespace spvc
