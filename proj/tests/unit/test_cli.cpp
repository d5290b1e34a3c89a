#include <filesystem>
#include <fstream>

#include "cli.hpp"
#include "doctest.h"
#include "spvc/cv.hpp"
#include "spvc/errors.hpp"
#include "spvc/sampler.hpp"

using namespace spvc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("spvc_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("fit then predict from files equals the in-process pipeline") {
  const fs::path dir = scratch("pipeline");
  cli::Common c;
  c.config = write_file(dir / "sim.json",
                        R"({"scenario": {"theta": {"sigma2": 2, "phi": 0.5, "nu": 0.5}, "n_train": 3, "n_test": 2}})");
  c.out = dir / "data";
  c.seed = 11;
  c.threads = 1;
  cli::cmd_simulate(c);

  c.config = write_file(dir / "fit.json",
                        R"({"model": {"variant": "NNGP+SSE", "m": 5}, "mcmc": {"chains": 2, "iters": 30, "burnin": 10}})");
  c.out = dir / "chains.txt";
  c.seed = 5;
  cli::cmd_fit(c, dir / "data" / "train");

  c.config = write_file(dir / "pred.json", R"({"predict": {"max_draws": 10}, "maps": false})");
  c.out = dir / "pred";
  c.seed = 9;
  cli::cmd_predict(c, dir / "data" / "test", dir / "chains.txt");
  const auto from_files = cli::read_predictions(dir / "pred" / "predictions.csv");

  const Dataset train = load_dataset(dir / "data" / "train");
  const Dataset test = load_dataset(dir / "data" / "test");
  ModelSpec spec;
  spec.variant = Variant::NNGP_SSE;
  spec.m = 5;
  McmcConfig mc;
  mc.chains = 2;
  mc.iters = 30;
  mc.burnin = 10;
  mc.seed = 5;
  PredictConfig pc;
  pc.max_draws = 10;
  pc.seed = 9;
  const auto direct = predict_dataset(test, fit(train, spec, mc), pc);

  REQUIRE(from_files.size() == direct.size());
  for (std::size_t i = 0; i < direct.size(); ++i) {
    CHECK(from_files[i].first == direct[i].image_id);
    CHECK(from_files[i].second == direct[i].prob);
  }
}

TEST_CASE("outputs carry the config hash, seed and version") {
  const fs::path dir = scratch("meta");
  cli::Common c;
  c.out = dir / "data";
  c.seed = 4;
  c.config = write_file(dir / "sim.json", R"({"scenario": {"n_train": 1, "n_test": 1}})");
  cli::cmd_simulate(c);
  const Json run = Json::parse(read_file(dir / "data" / "run.json"));
  CHECK(run["seed"] == 4);
  CHECK(run["version"] == SPVC_VERSION);
  CHECK(run["config_hash"] == cli::config_hash(run["config"]));
  const std::string manifest = read_file(dir / "data" / "train" / "manifest.txt");
  CHECK(manifest.find("# config_hash: \"" + run["config_hash"].get<std::string>() + "\"") != std::string::npos);
  CHECK(manifest.find("# seed: 4") != std::string::npos);

  // Rerunning from the embedded config alone reproduces the dataset.
  c.config = write_file(dir / "embedded.json", run["config"].dump());
  c.seed.reset();
  c.out = dir / "again";
  cli::cmd_simulate(c);
  CHECK(read_file(dir / "again" / "train" / "train000.csv") == read_file(dir / "data" / "train" / "train000.csv"));

  CHECK(cli::config_hash(Json{{"a", 1}}) == cli::config_hash(Json{{"a", 1}}));
  CHECK(cli::config_hash(Json{{"a", 1}}) != cli::config_hash(Json{{"a", 2}}));
  CHECK(cli::config_hash(Json::object()).size() == 16);
}

TEST_CASE("scenario with two replicates and two specs gives four rows") {
  const fs::path dir = scratch("scenario");
  cli::Common c;
  c.config = write_file(dir / "scen.json", R"({
    "scenario": {"theta": {"sigma2": 1, "phi": 0.5, "nu": 0.5}, "n_train": 2, "n_test": 1},
    "reps": 2,
    "specs": [{"name": "base", "model": {"variant": "Base"}}, {"model": {"variant": "SSE"}}],
    "mcmc": {"chains": 1, "iters": 10, "burnin": 5},
    "predict": {"max_draws": 5}
  })");
  c.out = dir / "rows.csv";
  c.seed = 3;
  cli::cmd_scenario(c);
  std::ifstream in(c.out);
  std::size_t rows = 0, comments = 0;
  bool header = false;
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("# ", 0) == 0) {
      ++comments;
    } else if (!header) {
      header = true;
      CHECK(line == "scenario,spec,rep,AUC,S80,runtime_s");
    } else {
      ++rows;
    }
  }
  CHECK(rows == 4);
  CHECK(comments >= 4);
}

TEST_CASE("config errors list every problem") {
  const fs::path dir = scratch("errors");
  cli::Common c;
  c.out = dir / "x.txt";
  c.config = write_file(dir / "bad.json",
                        R"({"model": {"variant": "GP-magic", "m": 0}, "mcmc": {"chains": 0}, "extra": true})");
  try {
    cli::cmd_fit(c, dir / "missing");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("unknown variant 'GP-magic'") != std::string::npos);
    for (const auto& name : variant_names()) CHECK(msg.find(name) != std::string::npos);
    CHECK(msg.find("model.m:") != std::string::npos);
    CHECK(msg.find("mcmc.chains:") != std::string::npos);
    CHECK(msg.find("extra: unknown key") != std::string::npos);
  }

  c.config = write_file(dir / "broken.json", "{\"model\": ");
  CHECK_THROWS_AS(cli::cmd_fit(c, dir / "missing"), ConfigError);
  c.config = dir / "nope.json";
  CHECK_THROWS_AS(cli::cmd_fit(c, dir / "missing"), IoError);
  c.config.clear();
  CHECK_THROWS_AS(cli::cmd_fit(c, dir / "missing"), Error);
}

TEST_CASE("validate runs a subset and writes a report") {
  const fs::path dir = scratch("validate");
  cli::Common c;
  c.out = dir / "report.txt";
  CHECK(cli::cmd_validate(c, {3, 10}, false));
  const std::string report = read_file(c.out);
  CHECK(report.find("[PASS] 3 nngp-sparsity") != std::string::npos);
  CHECK(report.find("[PASS] 10 metric-correctness") != std::string::npos);
  CHECK(report.find("# config_hash") != std::string::npos);
}
