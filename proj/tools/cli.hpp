#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spvc/config.hpp"

namespace spvc::cli {

/// Flags shared by every command.
struct Common {
  std::filesystem::path config;  // JSON file; empty means all defaults
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
  int threads = 0;  // 0 = available cores, capped by the number of images
};

/// Exit statuses. Errors also print one JSON line on stderr:
/// {"error": {"category": "...", "message": "..."}}.
enum Exit : int {
  kOk = 0,
  kUnknown = 1,
  kConfig = 3,
  kInput = 4,
  kNumerical = 5,
  kIo = 6,
  kCriteriaFailed = 7,
};

/// Reads a JSON config file (an empty object when `path` is empty).
Json load_config(const std::filesystem::path& path);

/// 64-bit FNV-1a of the compact JSON text, as 16 hex digits.
std::string config_hash(const Json& config);

/// Metadata stamped into every output: command, version, config hash, seed
/// and the resolved config itself.
Json run_metadata(const std::string& command, const Json& resolved, std::uint64_t seed);

/// Sets the OpenMP thread count and returns it.
int apply_threads(int requested, std::size_t images);

void cmd_simulate(const Common& common);
void cmd_fit(const Common& common, const std::filesystem::path& data);
void cmd_predict(const Common& common, const std::filesystem::path& data, const std::filesystem::path& chains);
void cmd_cv(const Common& common, const std::filesystem::path& data);
void cmd_scenario(const Common& common);
/// Returns true when every selected criterion passed.
bool cmd_validate(const Common& common, const std::vector<int>& ids, bool verbose);

/// Prediction file written by cmd_predict: probabilities keyed by image id, in voxel order.
std::vector<std::pair<std::string, std::vector<double>>> read_predictions(const std::filesystem::path& csv);

}  // namespace spvc::cli
