#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spvc/covariance.hpp"
#include "spvc/defaults.hpp"
#include "spvc/full_gp.hpp"

namespace spvc {

enum class Variant { Base, SSE, NNGP, NNGP_SSE, RR, RR_SSE, CAR, CAR_SSE, FullGP, FullGP_SSE };

enum class SpatialKind { None, NNGP, RR, CAR, Dense };

std::string variant_name(Variant v);
/// Accepts the names produced by variant_name ("NNGP+SSE", ...).
std::optional<Variant> parse_variant(std::string_view name);
const std::vector<std::string>& variant_names();

SpatialKind spatial_kind(Variant v);
bool has_sse(Variant v);
inline bool is_spatial(Variant v) { return spatial_kind(v) != SpatialKind::None; }

/// Priors on the feature model and bounds of the log-uniform priors on theta.
struct Hyperpriors {
  double mu_prior_var = defaults::kMuPriorVar;      // mu_{c,r} ~ N(0, mu_prior_var I)
  double gamma_df_extra = defaults::kGammaDfExtra;  // Gamma_{c,r} ~ IW(d + gamma_df_extra, gamma_scale I)
  double gamma_scale = defaults::kGammaScale;
  double sigma_df_extra = defaults::kSigmaDfExtra;  // Sigma ~ IW(d + sigma_df_extra, sigma_scale I)
  double sigma_scale = defaults::kSigmaScale;
  double sigma2_min = defaults::kSigma2Min, sigma2_max = defaults::kSigma2Max;
  double phi_min = defaults::kPhiMin, phi_max = defaults::kPhiMax;
  double nu_min = defaults::kNuMin, nu_max = defaults::kNuMax;
};

struct ModelSpec {
  Variant variant = Variant::Base;
  std::size_t m = defaults::kNeighbors;  // NNGP neighbors
  std::size_t a = defaults::kKnots;      // reduced-rank knots
  double alpha_car = defaults::kAlphaCar;
  std::optional<double> car_cutoff;  // CAR neighbors beyond this distance get no weight
  Hyperpriors hyper;
  std::optional<MaternParams> theta_fixed;
  MaternParams theta_init{defaults::kThetaInitSigma2, defaults::kThetaInitPhi, defaults::kThetaInitNu};
  std::optional<double> smoothing_bandwidth;  // M-smooth post-processing of predictions
  std::size_t dense_limit = kDenseLimit;

  /// Throws ConfigError listing every problem found.
  void validate() const;
};

/// Number of theta coordinates sampled: 3 for Matern kinds, 1 for CAR, 0 otherwise.
std::size_t theta_dims(const ModelSpec& spec);

/// Whether theta lies inside the prior support for the spec's variant.
bool theta_in_support(const ModelSpec& spec, const MaternParams& theta);

}  // namespace spvc
