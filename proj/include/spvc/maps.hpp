#pragma once

#include <array>
#include <filesystem>

#include "spvc/data_model.hpp"
#include "spvc/predict.hpp"

namespace spvc {

enum class MapClass { TP = 0, FP = 1, TN = 2, FN = 3 };

struct MapExport {
  std::filesystem::path heatmap;  // PGM, probabilities scaled by the image's range
  std::filesystem::path classes;  // PPM, empty when the image has no labels
  std::filesystem::path csv;
  bool scaled = true;             // false when the probabilities are constant
  std::array<std::size_t, 4> counts{0, 0, 0, 0};  // indexed by MapClass
};

/// Writes `<dir>/<id>_heatmap.pgm`, `<dir>/<id>_classes.ppm` (labeled images
/// only, score >= cutoff is positive; TP red, FP yellow, TN grey, FN blue) and
/// `<dir>/<id>_voxels.csv`. Pixels sit on the raw coordinate lattice.
MapExport export_maps(const PredictionResult& result, const VoxelImage& image, double cutoff,
                      const std::filesystem::path& dir);

/// Class counts recovered from a voxel CSV written by export_maps.
std::array<std::size_t, 4> read_class_counts(const std::filesystem::path& csv);

}  // namespace spvc
