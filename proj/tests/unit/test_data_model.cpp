#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "spvc/data_model.hpp"
#include "spvc/errors.hpp"
#include "test_helpers.hpp"

using namespace spvc;

namespace {

VoxelImage lattice_image(const std::string& id, std::size_t cols, std::size_t rows, std::uint64_t seed) {
  Coords raw = test::lattice(cols, rows);
  const auto n = static_cast<Eigen::Index>(raw.size());
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd f(n, 3);
  std::vector<std::uint8_t> region, labels;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (int k = 0; k < 3; ++k) f(j, k) = g(eng) * 1e3 / 7.0;
    region.push_back(static_cast<std::uint8_t>(j % 2));
    labels.push_back(static_cast<std::uint8_t>((j / 3) % 2));
  }
  return make_image(id, raw, region, f, labels);
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("spvc_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("normalize_coords maps corners onto the unit square") {
  const Coords out = normalize_coords({{0, 0}, {10, 0}, {0, 10}, {10, 10}});
  CHECK(out == Coords{{-1, -1}, {1, -1}, {-1, 1}, {1, 1}});
}

TEST_CASE("normalize_coords centers the bounding box") {
  const Coords out = normalize_coords({{2, 5}, {4, 5}, {6, 5}, {2, 9}, {6, 9}});
  CHECK(out[0] == Point{-1, -1});
  CHECK(out[1] == Point{0, -1});
  CHECK(out[2] == Point{1, -1});
  CHECK(out[3] == Point{-1, 1});
  CHECK(out[4] == Point{1, 1});
  // the box center (4,7) maps to the origin
  const Coords with_center = normalize_coords({{2, 5}, {6, 9}, {4, 7}});
  CHECK(with_center[2] == Point{0, 0});
}

TEST_CASE("random cloud lands exactly on [-1,1]^2 and renormalizing is idempotent") {
  const Coords raw = test::random_points(50, 17, -37.0, 112.0);
  const Coords out = normalize_coords(raw);
  double xlo = 9, xhi = -9, ylo = 9, yhi = -9;
  for (const auto& p : out) {
    xlo = std::min(xlo, p.x); xhi = std::max(xhi, p.x);
    ylo = std::min(ylo, p.y); yhi = std::max(yhi, p.y);
  }
  CHECK(xlo == -1.0);
  CHECK(xhi == 1.0);
  CHECK(ylo == -1.0);
  CHECK(yhi == 1.0);
  const Coords again = normalize_coords(out);
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(std::abs(again[i].x - out[i].x) <= 1e-12);
    CHECK(std::abs(again[i].y - out[i].y) <= 1e-12);
  }
}

TEST_CASE("normalize_coords rejects degenerate input") {
  CHECK_THROWS_AS(normalize_coords({{1, 2}, {3, 2}}), InputError);
  CHECK_THROWS_AS(normalize_coords({{1, 2}}), InputError);
  CHECK_THROWS_AS(normalize_coords({{1, 2}, {NAN, 3}}), InputError);
}

TEST_CASE("make_image enforces invariants") {
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(2, 1);
  CHECK_THROWS_AS(make_image("a", {{0, 0}, {0, 0}}, {0, 1}, f), InputError);
  CHECK_THROWS_AS(make_image("a", {{0, 0}, {1, 1}}, {0}, f), InputError);
  CHECK_THROWS_AS(make_image("a", {}, {}, Eigen::MatrixXd(0, 1)), InputError);
  CHECK_NOTHROW(make_image("a", {{0, 0}, {1, 1}}, {0, 1}, f));
}

TEST_CASE("downsample_third keeps every third row and column") {
  const VoxelImage img = lattice_image("grid", 9, 9, 1);
  const VoxelImage small = downsample_third(img);
  CHECK(small.size() == 9);
  // region and labels follow their voxels
  for (std::size_t k = 0; k < small.size(); ++k) {
    const auto& p = small.raw[k];
    const std::size_t j = static_cast<std::size_t>(p.y) * 9 + static_cast<std::size_t>(p.x);
    CHECK(static_cast<long>(p.x) % 3 == 0);
    CHECK(static_cast<long>(p.y) % 3 == 0);
    CHECK(small.region[k] == img.region[j]);
    CHECK((*small.labels)[k] == (*img.labels)[j]);
  }
  CHECK(small.coords.front() == Point{-1, -1});
}

TEST_CASE("downsample_third rejects degenerate and off-lattice input") {
  // a single voxel cannot form a normalized image at all
  CHECK_THROWS_AS(make_image("one", {{0, 0}}, {0}, Eigen::MatrixXd::Zero(1, 1)), InputError);
  // a 2x2 lattice keeps a single voxel, which has no second distinct row
  const VoxelImage tiny = make_image("a", test::lattice(2, 2), {0, 0, 0, 0}, Eigen::MatrixXd::Zero(4, 1));
  CHECK_THROWS_AS(downsample_third(tiny), InputError);
  const VoxelImage off = make_image("b", {{0, 0}, {1, 0}, {0, 1}, {2.5, 1}}, {0, 0, 0, 0}, Eigen::MatrixXd::Zero(4, 1));
  CHECK_THROWS_AS(downsample_third(off), InputError);
}

TEST_CASE("dataset round trip is bit exact, including missing values") {
  Dataset d;
  d.feature_names = {"adc", "augc90", "ktrans"};
  d.images.push_back(lattice_image("p01", 4, 3, 2));
  d.images.push_back(lattice_image("p02", 5, 2, 3));
  d.images[0].features(3, 1) = std::nan("");
  d.images[1].labels.reset();
  const auto dir = temp_dir("roundtrip");
  write_dataset(d, dir);
  const Dataset back = load_dataset(dir);
  REQUIRE(back.images.size() == 2);
  CHECK(back.feature_names == d.feature_names);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& a = d.images[i];
    const auto& b = back.images[i];
    CHECK(a.id == b.id);
    CHECK(a.raw == b.raw);
    CHECK(a.coords == b.coords);
    CHECK(a.region == b.region);
    CHECK(a.labels == b.labels);
    for (Eigen::Index j = 0; j < a.features.rows(); ++j)
      for (Eigen::Index k = 0; k < a.features.cols(); ++k) {
        if (std::isnan(a.features(j, k))) CHECK(std::isnan(b.features(j, k)));
        else CHECK(a.features(j, k) == b.features(j, k));
      }
  }
  CHECK(back.images[0].missing(3, 1));
  CHECK(!back.images[0].complete(3));
  CHECK(back.images[0].complete(2));
}

TEST_CASE("load_dataset reports malformed rows") {
  const auto dir = temp_dir("malformed");
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "manifest.txt") << "format = spvc-dataset/1\nfeatures = a,b,c,d\nimage = x x.csv\n";
  {
    std::ofstream f(dir / "x.csv");
    f << "x_raw,y_raw,region,label,a,b,c,d\n";
    f << "0,0,1,0,1,2,3,4\n";
    f << "1,0,1,0,1,2,,4\n";
    f << "0,1,0,1,1,2,3,4,5\n";
  }
  try {
    load_dataset(dir);
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
}

TEST_CASE("row with one missing feature keeps the voxel") {
  const auto dir = temp_dir("missing");
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "manifest.txt") << "format = spvc-dataset/1\nfeatures = a,b,c,d\nimage = x x.csv\n";
  std::ofstream(dir / "x.csv") << "x_raw,y_raw,region,label,a,b,c,d\n0,0,1,0,1,2,3,4\n1,1,1,0,1,2,,4\n";
  const Dataset d = load_dataset(dir / "manifest.txt");
  REQUIRE(d.images[0].size() == 2);
  CHECK(d.images[0].missing(1, 2));
  CHECK(d.images[0].features(1, 3) == 4.0);
}

TEST_CASE("duplicate image ids are rejected") {
  const auto dir = temp_dir("dupe");
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "manifest.txt") << "format = spvc-dataset/1\nfeatures = a\nimage = x x.csv\nimage = x x.csv\n";
  std::ofstream(dir / "x.csv") << "x_raw,y_raw,region,label,a\n0,0,1,0,1\n1,1,1,0,1\n";
  CHECK_THROWS_AS(load_dataset(dir), InputError);
}
