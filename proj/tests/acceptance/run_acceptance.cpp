// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
// Exit status is 0 only when every selected criterion passes.

#include <iostream>

#include "CLI11.hpp"
#include "spvc_validation/acceptance.hpp"

int main(int argc, char** argv) {
  CLI::App app{"spvc acceptance checks"};
  std::vector<int> ids;
  bool verbose = false;
  spvc::validation::AcceptanceConfig config;
  app.add_option("ids", ids, "Criteria to run (default: all)")->check(CLI::Range(1, 11));
  app.add_option("--seed", config.seed, "Base seed");
  app.add_flag("-v,--verbose", verbose, "Progress lines on stderr");
  CLI11_PARSE(app, argc, argv);
  if (ids.empty()) ids = spvc::validation::criterion_ids();

  auto log = [&](const std::string& line) {
    if (verbose) std::cerr << line << std::endl;
  };
  int failed = 0;
  for (int id : ids) {
    const auto r = spvc::validation::run_criterion(id, config, log);
    std::cout << spvc::validation::format_result(r) << std::endl;
    failed += !r.pass;
  }
  std::cout << (ids.size() - static_cast<std::size_t>(failed)) << "/" << ids.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
