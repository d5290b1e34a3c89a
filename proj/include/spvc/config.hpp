#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "spvc/model.hpp"
#include "spvc/predict.hpp"
#include "spvc/sampler.hpp"
#include "spvc/simulate.hpp"

namespace spvc {

using Json = nlohmann::json;

/// Collects every problem found while reading a JSON object against the
/// expected keys, instead of stopping at the first.
class JsonReader {
 public:
  JsonReader(const Json& object, std::string path, std::vector<std::string>& problems);

  void number(const char* key, double& out, bool positive = false);
  void count(const char* key, std::size_t& out, std::size_t min = 0);
  void seed(const char* key, std::uint64_t& out);
  void text(const char* key, std::string& out);
  void flag(const char* key, bool& out);
  void optional_number(const char* key, std::optional<double>& out);
  bool has(const char* key) const;
  /// Reader over a nested object; an absent key reads as an empty object.
  JsonReader child(const char* key);
  const Json& raw(const char* key) const { return object_.at(key); }
  /// Marks a key as known without reading it.
  void accept(const char* key) { seen_.emplace_back(key); }
  void fail(const std::string& key, const std::string& message);
  /// Reports keys that were present but never read.
  void finish();
  const std::string& path() const { return path_; }

 private:
  const Json* get(const char* key);

  const Json& object_;
  std::string path_;
  std::vector<std::string>& problems_;
  std::vector<std::string> seen_;
};

Json to_json(const MaternParams& t);
Json to_json(const Hyperpriors& h);
Json to_json(const ModelSpec& spec);
Json to_json(const McmcConfig& mcmc);
Json to_json(const PredictConfig& predict);
Json to_json(const BaseParams& base);
Json to_json(const SimScenario& scenario);

void read_theta(JsonReader& r, MaternParams& out);
void read_model_spec(JsonReader& r, ModelSpec& out);
void read_mcmc(JsonReader& r, McmcConfig& out);
void read_predict(JsonReader& r, PredictConfig& out);
/// Matrices are arrays of rows; strata are keyed "c0_r0", "c0_r1", "c1_r0", "c1_r1".
void read_base_params(JsonReader& r, BaseParams& out);
void read_scenario(JsonReader& r, SimScenario& out);

/// Parses a complete ModelSpec; throws ConfigError listing all problems.
ModelSpec model_spec_from_json(const Json& j);
McmcConfig mcmc_from_json(const Json& j);

/// Throws ConfigError with a bulleted list when `problems` is not empty.
void throw_if_problems(const std::string& what, const std::vector<std::string>& problems);

}  // namespace spvc
