#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace spvc::validation {

struct AcceptanceConfig {
  std::uint64_t seed = 20240;
  std::size_t reps = 10;  // replicates for the recovery and scenario criteria
  // parameter recovery
  std::size_t recovery_chains = 2;
  std::size_t recovery_iters = 3000;
  std::size_t recovery_burnin = 1000;
  // scenario comparisons
  std::size_t scenario_chains = 2;
  std::size_t scenario_iters = 1500;
  std::size_t scenario_burnin = 500;
  std::size_t predict_max_draws = 200;
  // joint-distribution test
  std::size_t geweke_iters = 200000;
  std::size_t geweke_thin = 50;
  std::size_t geweke_forward = 4000;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
  double budget_seconds = 0.0;
};

/// Ids 1..11 in order.
std::vector<int> criterion_ids();
std::string criterion_name(int id);

/// Runs one criterion; exceptions are caught and reported as a failure.
/// `log` receives progress lines.
CriterionResult run_criterion(int id, const AcceptanceConfig& config,
                              const std::function<void(const std::string&)>& log = {});

/// One line: "[PASS] 3 nngp-sparsity (0.4 s): detail".
std::string format_result(const CriterionResult& r);

}  // namespace spvc::validation
