#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "spvc/cv.hpp"
#include "spvc/errors.hpp"
#include "spvc/maps.hpp"
#include "spvc/simulate.hpp"
#include "test_helpers.hpp"

using namespace spvc;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> ids(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("p" + std::to_string(100 + i));
  return out;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("spvc_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("folds partition the images deterministically") {
  const auto all = ids(17);
  const auto folds = assign_folds(all, 5, 42);
  REQUIRE(folds.size() == 5);
  std::set<std::string> seen;
  std::size_t lo = 100, hi = 0;
  for (const auto& f : folds) {
    lo = std::min(lo, f.size());
    hi = std::max(hi, f.size());
    for (const auto& id : f) CHECK(seen.insert(id).second);
  }
  CHECK(seen.size() == all.size());
  CHECK(hi - lo <= 1);

  auto reversed = all;
  std::reverse(reversed.begin(), reversed.end());
  CHECK(assign_folds(reversed, 5, 42) == folds);
  CHECK(assign_folds(all, 5, 43) != folds);

  CHECK_THROWS_AS(assign_folds(all, 1, 1), ConfigError);
  CHECK_THROWS_AS(assign_folds(ids(3), 4, 1), ConfigError);
  CHECK_THROWS_AS(assign_folds({"a", "a", "b"}, 2, 1), InputError);
}

TEST_CASE("cross-validation scores every fold and is reproducible") {
  SimScenario sc;
  sc.theta = {1e-6, 0.5, 0.5};
  const Dataset data = simulate_dataset(sc, 6, 5);
  ModelSpec spec;
  McmcConfig mc;
  mc.chains = 1;
  mc.iters = 30;
  mc.burnin = 10;
  PredictConfig pc;
  const CvReport a = kfold_cv(data, 3, spec, mc, pc, 7);
  REQUIRE(a.folds.size() == 3);
  std::size_t predicted = 0;
  for (const auto& f : a.folds) {
    CHECK(f.test_ids.size() == 2);
    CHECK(f.predictions.size() == 2);
    CHECK_FALSE(f.flagged());
    predicted += f.predictions.size();
  }
  CHECK(predicted == data.images.size());
  CHECK(a.mean_auc > 0.5);
  CHECK(a.mean_auc <= 1.0);
  const CvReport b = kfold_cv(data, 3, spec, mc, pc, 7);
  CHECK(a.mean_auc == b.mean_auc);
  CHECK(a.mean_s80 == b.mean_s80);
}

TEST_CASE("maps round-trip class counts and scale the heatmap") {
  const Coords raw = test::lattice(5, 4, 2.0);
  std::vector<std::uint8_t> region(raw.size(), 1), labels(raw.size());
  PredictionResult r;
  r.image_id = "m1";
  for (std::size_t j = 0; j < raw.size(); ++j) {
    labels[j] = j % 3 == 0;
    r.prob.push_back(0.05 * static_cast<double>(j));
  }
  const VoxelImage im = make_image("m1", raw, region, Eigen::MatrixXd::Zero(20, 1), labels);
  const fs::path dir = scratch_dir("maps");
  const MapExport ex = export_maps(r, im, 0.5, dir);
  CHECK(ex.scaled);
  std::array<std::size_t, 4> expect{0, 0, 0, 0};
  for (std::size_t j = 0; j < raw.size(); ++j) {
    const bool pos = r.prob[j] >= 0.5;
    const MapClass c = labels[j] ? (pos ? MapClass::TP : MapClass::FN) : (pos ? MapClass::FP : MapClass::TN);
    ++expect[static_cast<std::size_t>(c)];
  }
  CHECK(ex.counts == expect);
  CHECK(read_class_counts(ex.csv) == expect);

  std::ifstream pgm(ex.heatmap, std::ios::binary);
  std::string magic;
  int cols = 0, rows = 0, depth = 0;
  pgm >> magic >> cols >> rows >> depth;
  pgm.get();
  CHECK(magic == "P5");
  CHECK(cols == 5);
  CHECK(rows == 4);
  std::vector<unsigned char> px(20);
  pgm.read(reinterpret_cast<char*>(px.data()), 20);
  CHECK(*std::min_element(px.begin(), px.end()) == 1);
  CHECK(*std::max_element(px.begin(), px.end()) == 255);
  CHECK(fs::exists(ex.classes));

  r.prob.assign(raw.size(), 0.3);
  CHECK_FALSE(export_maps(r, im, 0.5, dir).scaled);
  fs::remove_all(dir);
}

TEST_CASE("maps of unlabeled images skip the class map") {
  const Coords raw = test::lattice(3, 3);
  const VoxelImage im = make_image("u", raw, std::vector<std::uint8_t>(9, 0), Eigen::MatrixXd::Zero(9, 1));
  PredictionResult r;
  r.image_id = "u";
  for (int j = 0; j < 9; ++j) r.prob.push_back(j / 8.0);
  const fs::path dir = scratch_dir("maps_unlabeled");
  const MapExport ex = export_maps(r, im, 0.5, dir);
  CHECK(ex.classes.empty());
  CHECK(fs::exists(ex.heatmap));
  fs::remove_all(dir);
}
