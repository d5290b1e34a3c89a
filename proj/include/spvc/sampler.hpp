#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spvc/data_model.hpp"
#include "spvc/defaults.hpp"
#include "spvc/model.hpp"
#include "spvc/rng.hpp"
#include "spvc/spatial_field.hpp"

namespace spvc {

/// Stratum index for cancer status c and region r (1 = PZ).
inline int stratum(int c, int r) { return 2 * c + r; }

/// Global parameters shared by every image.
struct Globals {
  std::array<Eigen::VectorXd, 4> mu;     // mu_{c,r}, indexed by stratum()
  std::array<Eigen::MatrixXd, 4> gamma;  // Gamma_{c,r}
  Eigen::MatrixXd sigma;                 // between-subject covariance (SSE variants)
  MaternParams theta{1.0, 0.5, 1.0};     // CAR uses sigma2 only
  std::array<double, 2> q0{0.0, 0.0};    // indexed by region
};

/// Probit intercepts from the sample prevalence of each region.
/// Throws InputError when a region is empty, all 0 or all 1.
std::array<double, 2> compute_q0(const Dataset& train);

struct McmcConfig {
  std::size_t chains = defaults::kChains;
  std::size_t iters = defaults::kIters;  // iterations per chain after burn-in
  std::size_t burnin = defaults::kBurnin;
  std::size_t thin = defaults::kThin;
  std::uint64_t seed = defaults::kSeed;

  void validate() const;
};

/// Sufficient statistics of complete-feature voxels of one image in one stratum.
struct StratumStats {
  double count = 0.0;
  Eigen::VectorXd sum;
  Eigen::MatrixXd outer;
};

/// One training image inside the sampler.
struct ImageState {
  std::string id;
  std::uint64_t key = 0;  // stream key derived from the id
  std::vector<std::uint8_t> region;
  std::vector<std::uint8_t> labels;
  std::array<StratumStats, 4> stats;
  std::unique_ptr<SpatialField> field;
  Eigen::VectorXd w;      // latent state (knot values under RR)
  Eigen::VectorXd eta;    // per-voxel field implied by w
  Eigen::VectorXd kappa;
  Eigen::VectorXd delta;
};

/// Adaptive random-walk proposal on log theta.
struct RandomWalk {
  Eigen::MatrixXd chol;  // proposal shape
  double log_scale = 0.0;
  std::size_t proposed = 0, accepted = 0;
  std::size_t window_proposed = 0, window_accepted = 0;
};

/// Metropolis-within-Gibbs sampler for one chain.
class Sampler {
 public:
  Sampler(const Dataset& train, const ModelSpec& spec, std::uint64_t seed, std::size_t chain);

  /// Runs one full sweep: kappa, w, theta, (mu, Gamma), (delta, Sigma).
  void step();

  void update_kappa();
  void update_w();
  /// Centered and standardized block moves; returns the number accepted.
  int update_theta();
  void update_mu_gamma();
  void update_delta_sigma();

  /// Adapts the theta proposals from the recent acceptance window and,
  /// once enough history exists, from the empirical covariance of log theta.
  void adapt();
  /// Stops adaptation and restarts the acceptance counters.
  void freeze_adaptation();

  /// Replaces one image's labels and features (same voxels) and recomputes
  /// its sufficient statistics.
  void set_image_data(std::size_t image, const std::vector<std::uint8_t>& labels, const Eigen::MatrixXd& features);
  /// Sets the iteration counter that keys the random streams.
  void set_iteration(std::size_t iter) { iter_ = iter; }
  /// Overrides a theta proposal (0 = centered, 1 = standardized).
  void set_proposal(int move, const Eigen::MatrixXd& chol, double log_scale);

  const Globals& globals() const { return g_; }
  Globals& globals() { return g_; }
  const std::vector<ImageState>& images() const { return images_; }
  std::vector<ImageState>& images() { return images_; }
  const ModelSpec& spec() const { return spec_; }
  std::size_t iteration() const { return iter_; }
  double acceptance_rate(int move) const;
  /// Re-evaluates eta after external edits of w or theta.
  void refresh_fields();

 private:
  Stream stream(std::uint64_t purpose, std::uint64_t key = 0) const;
  int theta_move(bool standardized, RandomWalk& rw, std::uint64_t purpose);

  ModelSpec spec_;
  std::uint64_t seed_;
  std::size_t chain_;
  std::size_t iter_ = 0;
  Eigen::Index d_ = 0;
  std::vector<ImageState> images_;  // sorted by id
  Globals g_;
  std::array<RandomWalk, 2> rw_;
  std::vector<Eigen::VectorXd> log_theta_history_;
  bool adapting_ = true;
  bool warned_empty_ = false;
};

struct Draw {
  Globals globals;
  std::vector<Eigen::VectorXd> delta;  // per image, in ChainSet::image_ids order
};

struct Chain {
  std::uint64_t seed = 0;
  std::vector<Draw> draws;
  std::array<double, 2> acceptance{0.0, 0.0};  // centered, standardized theta moves
};

struct ChainSet {
  ModelSpec spec;
  McmcConfig mcmc;
  std::vector<std::string> image_ids;  // sorted
  std::vector<std::string> feature_names;
  std::vector<Chain> chains;

  Eigen::Index dim() const { return static_cast<Eigen::Index>(feature_names.size()); }
  std::size_t draws_per_chain() const { return chains.empty() ? 0 : chains.front().draws.size(); }
  /// Total retained draws over all chains.
  std::size_t total_draws() const;
  const Draw& draw(std::size_t index) const;

  /// Scalar parameter names in column order.
  std::vector<std::string> scalar_names() const;
  /// Scalar parameters of one draw in column order.
  std::vector<double> scalars(const Draw& d) const;
  /// Rebuilds a draw from a row of scalars.
  Draw from_scalars(const std::vector<double>& row) const;

  /// Split-R-hat for every scalar column that varies (NaN otherwise).
  std::map<std::string, double> split_rhat() const;

  /// Throws InputError when chains are missing or of unequal length.
  void validate() const;
};

/// A ChainSet holding `copies` identical draws of fixed globals, for
/// prediction under known parameters.
ChainSet fixed_chainset(const ModelSpec& spec, const Globals& globals, std::vector<std::string> feature_names,
                        std::size_t copies);

/// Runs every chain (chains in parallel) and collects thinned draws.
ChainSet fit(const Dataset& train, const ModelSpec& spec, const McmcConfig& mcmc);

/// Columnar text: '#'-prefixed metadata lines (JSON values), a header row,
/// then one row per draw with 17 significant digits. `extra_meta` values are
/// JSON text.
void write_chainset(const ChainSet& chains, const std::filesystem::path& path,
                    const std::map<std::string, std::string>& extra_meta = {});
ChainSet read_chainset(const std::filesystem::path& path);

/// Split-R-hat of a set of equal-length chains.
double split_rhat(const std::vector<std::vector<double>>& chains);

}  // namespace spvc
