#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spvc/model.hpp"

namespace spvc::validation {

/// Joint-distribution test of the sampler: parameters drawn from the prior
/// with data simulated forward are compared against a chain that alternates
/// a full sampler sweep with resimulation of (kappa, c, y) given the
/// parameters. Both have the prior as parameter marginal.
struct GewekeConfig {
  Variant variant = Variant::NNGP_SSE;
  std::size_t images = 2;
  std::size_t voxels = 20;
  Eigen::Index dim = 2;
  std::size_t m = 10;
  std::size_t forward_draws = 4000;
  std::size_t iters = 200000;
  std::size_t burnin = 5000;
  std::size_t thin = 50;
  std::uint64_t seed = 1;
};

struct GewekeStat {
  std::string name;
  double statistic = 0.0;
  double p_value = 0.0;
};

struct GewekeResult {
  std::vector<GewekeStat> stats;
  double min_p = 1.0;
  double corrected_p = 1.0;  // Bonferroni: min(1, min_p * count)
  std::size_t chain_samples = 0;
};

GewekeResult geweke_test(const GewekeConfig& config);

}  // namespace spvc::validation
