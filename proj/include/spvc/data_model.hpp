#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace spvc {

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

using Coords = std::vector<Point>;

inline double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Per-axis affine map of the bounding box onto [-1,1]^2, box center to the
/// origin. Throws InputError on fewer than two distinct points, non-finite
/// values, or an axis without spread.
Coords normalize_coords(const Coords& raw);

/// One subject's image. Coordinates are held both as read (`raw`, used for
/// lattice recovery and export) and normalized (`coords`, used by every
/// spatial model). Missing feature entries are NaN.
struct VoxelImage {
  std::string id;
  Coords raw;
  Coords coords;
  std::vector<std::uint8_t> region;  // 1 = PZ, 0 = CG
  Eigen::MatrixXd features;          // n x d
  std::optional<std::vector<std::uint8_t>> labels;

  std::size_t size() const { return raw.size(); }
  Eigen::Index dim() const { return features.cols(); }
  bool labeled() const { return labels.has_value(); }
  bool missing(std::size_t voxel, Eigen::Index feature) const {
    return std::isnan(features(static_cast<Eigen::Index>(voxel), feature));
  }
  /// True when every feature of the voxel is observed.
  bool complete(std::size_t voxel) const;
};

/// Validates the invariants and fills `coords` from `raw`.
VoxelImage make_image(std::string id, Coords raw, std::vector<std::uint8_t> region,
                      Eigen::MatrixXd features,
                      std::optional<std::vector<std::uint8_t>> labels = std::nullopt);

/// Keeps voxels on every third lattice row and column (indices = 0 mod 3),
/// then renormalizes. The lattice step on each axis is the smallest gap
/// between distinct raw values; all values must sit on multiples of it.
VoxelImage downsample_third(const VoxelImage& image);

/// Copy of the image restricted to the given voxel indices (coords renormalized).
VoxelImage subset_image(const VoxelImage& image, const std::vector<std::size_t>& keep);

/// Copy of the image without labels.
VoxelImage strip_labels(const VoxelImage& image);

struct Dataset {
  std::vector<VoxelImage> images;
  std::vector<std::string> feature_names;

  Eigen::Index dim() const { return static_cast<Eigen::Index>(feature_names.size()); }
  /// Throws InputError on duplicate ids or inconsistent feature dimension.
  void validate() const;
};

/// Writes `<dir>/manifest.txt` plus one CSV per image. `header_comments`
/// become '#' lines at the top of the manifest.
void write_dataset(const Dataset& data, const std::filesystem::path& dir,
                   const std::vector<std::string>& header_comments = {});

/// Reads a dataset from a manifest path or a directory containing manifest.txt.
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace spvc
