#include <iostream>

#include "CLI11.hpp"
#include "cli.hpp"
#include "spvc/errors.hpp"

namespace {

int report_error(const char* category, const std::string& message, int code) {
  spvc::Json j{{"error", {{"category", category}, {"message", message}}}};
  std::cerr << message << '\n' << j.dump() << std::endl;
  return code;
}

void add_common(CLI::App* cmd, spvc::cli::Common& c, bool out_required = true) {
  cmd->add_option("-c,--config", c.config, "JSON config file (defaults when omitted)");
  auto* out = cmd->add_option("-o,--out", c.out, "Output path");
  if (out_required) out->required();
  cmd->add_option("--seed", c.seed, "Overrides the seeds of the config");
  cmd->add_option("--threads", c.threads, "Worker threads (default: cores, capped by image count)")
      ->check(CLI::NonNegativeNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spvc: spatial probit voxel classification"};
  app.set_version_flag("--version", SPVC_VERSION);
  app.require_subcommand(1);
  spvc::cli::Common common;
  std::filesystem::path data, chains;
  std::vector<int> ids;
  bool verbose = false;

  auto* sim = app.add_subcommand("simulate", "Simulate training and test datasets");
  add_common(sim, common);
  auto* fit = app.add_subcommand("fit", "Fit a model and write the posterior draws");
  add_common(fit, common);
  fit->add_option("-d,--data", data, "Dataset directory or manifest")->required();
  auto* pred = app.add_subcommand("predict", "Predict cancer probabilities and export maps");
  add_common(pred, common);
  pred->add_option("-d,--data", data, "Dataset directory or manifest")->required();
  pred->add_option("--chains", chains, "Chain file written by fit")->required();
  auto* cv = app.add_subcommand("cv", "Image-level k-fold cross-validation");
  add_common(cv, common);
  cv->add_option("-d,--data", data, "Dataset directory or manifest")->required();
  auto* scen = app.add_subcommand("scenario", "Replicated simulation study over model variants");
  add_common(scen, common);
  auto* val = app.add_subcommand("validate", "Run the oracle and property checks");
  add_common(val, common, false);
  val->add_option("ids", ids, "Criteria to run (default: all)")->check(CLI::Range(1, 11));
  val->add_flag("-v,--verbose", verbose, "Progress lines on stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  using namespace spvc::cli;
  try {
    if (*sim) cmd_simulate(common);
    if (*fit) cmd_fit(common, data);
    if (*pred) cmd_predict(common, data, chains);
    if (*cv) cmd_cv(common, data);
    if (*scen) cmd_scenario(common);
    if (*val && !cmd_validate(common, ids, verbose)) return kCriteriaFailed;
  } catch (const spvc::Error& e) {
    static const int codes[] = {kInput, kConfig, kNumerical, kIo};
    return report_error(spvc::category_name(e.category()), e.what(), codes[static_cast<int>(e.category())]);
  } catch (const std::filesystem::filesystem_error& e) {
    return report_error("io", e.what(), kIo);
  } catch (const std::exception& e) {
    return report_error("unknown", e.what(), kUnknown);
  }
  return kOk;
}
