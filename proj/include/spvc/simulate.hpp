#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spvc/covariance.hpp"
#include "spvc/data_model.hpp"
#include "spvc/model.hpp"
#include "spvc/predict.hpp"
#include "spvc/sampler.hpp"

namespace spvc {

/// Feature-model parameters of the generator. Strata are indexed by stratum(c, r);
/// prevalence by region (0 = CG, 1 = PZ).
struct BaseParams {
  std::vector<std::string> feature_names;
  std::array<Eigen::VectorXd, 4> mu;
  std::array<Eigen::MatrixXd, 4> gamma;
  Eigen::MatrixXd sigma;  // between-subject covariance; zero disables subject effects
  std::array<double, 2> prevalence{defaults::kPrevalenceCG, defaults::kPrevalencePZ};

  Eigen::Index dim() const { return static_cast<Eigen::Index>(feature_names.size()); }
  /// Throws ConfigError listing every problem.
  void validate() const;
};

/// Four features, unit-scale class-conditional Gaussians whose means differ
/// between classes, and a moderate between-subject shift.
BaseParams default_base_params();

/// Coordinates and region flags of one image outline.
struct Mask {
  std::string name;
  Coords raw;
  std::vector<std::uint8_t> region;
};

/// Elliptical outline on a regular lattice with spacing defaults::kMaskStep:
/// an inner "CG" ellipse (region 0) inside an outer "PZ" ring (region 1).
Mask synthetic_mask(std::uint64_t seed);

/// Keeps every third lattice row and column.
Mask reduce_mask(const Mask& mask);

/// `count` masks drawn with replacement from `source` (or synthetic outlines
/// when no source is given), reduced with reduce_mask when `reduce` is set.
std::vector<Mask> make_masks(const Dataset* source, std::size_t count, std::uint64_t seed, bool reduce = true);

enum class SpatialScenario { Matern, MaternMixture };

struct SimScenario {
  std::string name = "scenario";
  MaternParams theta{1.0, 0.5, 0.5};
  std::size_t n_train = 10;
  std::size_t n_test = 5;
  SpatialScenario kind = SpatialScenario::Matern;
  BaseParams base = default_base_params();

  void validate() const;
};

/// Probit intercepts Phi^{-1}(prevalence) of the generator.
std::array<double, 2> generator_q0(const BaseParams& base);

/// Forward simulation: w ~ GP(0, C_theta) on the normalized coordinates,
/// kappa ~ N(q0[r] + w, 1), c = I(kappa > 0), delta ~ N(0, Sigma),
/// y ~ N(mu_{c,r} + delta, Gamma_{c,r}).
VoxelImage simulate_image(const Mask& mask, const SimScenario& scenario, std::uint64_t seed, std::string id);

/// Average of three Matern covariances: (20, 0.25, 0.5), (20, 1, 1), (20, 4, 1.5).
Eigen::MatrixXd mixture_cov(const Coords& s);

/// simulate_image with the spatial field drawn from mixture_cov.
VoxelImage simulate_mixture_image(const Mask& mask, const BaseParams& base, std::uint64_t seed, std::string id);

/// Images for one replicate: n_train training images followed by n_test test images.
Dataset simulate_dataset(const SimScenario& scenario, std::size_t count, std::uint64_t seed,
                         const Dataset* mask_source = nullptr, const std::string& prefix = "img");

struct NamedSpec {
  std::string name;
  ModelSpec spec;
};

struct ScenarioRow {
  std::string scenario;
  std::string spec;
  std::size_t rep = 0;
  double auc = std::nan("");
  double s80 = std::nan("");
  double runtime_s = 0.0;
  std::string error;  // empty on success
};

struct ScenarioSummary {
  double mean_auc = std::nan(""), sd_auc = std::nan("");
  double mean_s80 = std::nan(""), sd_s80 = std::nan("");
  std::size_t reps = 0;
};

/// For each replicate: simulate n_train + n_test images, fit every spec on the
/// training images, predict the test images and score the pooled ROC.
/// Replicates run in parallel; a failing (rep, spec) is logged and recorded
/// with its error instead of a score.
std::vector<ScenarioRow> run_scenario(const SimScenario& scenario, std::size_t reps, const std::vector<NamedSpec>& specs,
                                      const McmcConfig& mcmc, const PredictConfig& predict, std::uint64_t seed,
                                      const Dataset* mask_source = nullptr);

std::map<std::string, ScenarioSummary> summarize(const std::vector<ScenarioRow>& rows);

/// CSV with columns scenario,spec,rep,AUC,S80,runtime_s.
void write_scenario_csv(const std::vector<ScenarioRow>& rows, const std::filesystem::path& path,
                        const std::vector<std::string>& header_comments = {});

}  // namespace spvc
