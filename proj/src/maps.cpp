#include "spvc/maps.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "spvc/errors.hpp"
#include "spvc/format.hpp"

namespace spvc {

namespace {

// Pixel index along one axis: offset from the minimum over the smallest gap.
std::vector<long> pixel_index(const Coords& pts, double Point::*axis, long& extent) {
  std::vector<double> v;
  for (const auto& p : pts) v.push_back(p.*axis);
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  double step = 1.0;
  if (v.size() > 1) {
    step = v[1] - v[0];
    for (std::size_t k = 2; k < v.size(); ++k) step = std::min(step, v[k] - v[k - 1]);
  }
  std::vector<long> out;
  extent = 1;
  for (const auto& p : pts) {
    out.push_back(std::lround((p.*axis - v.front()) / step));
    extent = std::max(extent, out.back() + 1);
  }
  return out;
}

const char* class_name(MapClass c) {
  switch (c) {
    case MapClass::TP: return "TP";
    case MapClass::FP: return "FP";
    case MapClass::TN: return "TN";
    case MapClass::FN: return "FN";
  }
  return "";
}

}  // namespace

MapExport export_maps(const PredictionResult& result, const VoxelImage& image, double cutoff,
                      const std::filesystem::path& dir) {
  if (result.prob.size() != image.size()) throw InputError("prediction does not match image " + image.id);
  std::filesystem::create_directories(dir);
  MapExport out;
  long cols = 0, rows = 0;
  const auto cx = pixel_index(image.raw, &Point::x, cols);
  const auto ry = pixel_index(image.raw, &Point::y, rows);
  if (cols * rows > 50'000'000) throw InputError("raster for image " + image.id + " is too large");

  const auto [lo_it, hi_it] = std::minmax_element(result.prob.begin(), result.prob.end());
  const double lo = *lo_it, hi = *hi_it;
  out.scaled = hi > lo;
  if (!out.scaled)
    std::cerr << "warning: image " << image.id << " has constant probabilities; heatmap left unscaled\n";
  auto scaled = [&](double p) { return out.scaled ? (p - lo) / (hi - lo) : p; };

  const auto pixel = [&](std::size_t j) { return static_cast<std::size_t>((rows - 1 - ry[j]) * cols + cx[j]); };
  std::vector<unsigned char> gray(static_cast<std::size_t>(cols * rows), 0);
  for (std::size_t j = 0; j < image.size(); ++j)
    gray[pixel(j)] = static_cast<unsigned char>(1 + std::lround(254.0 * scaled(result.prob[j])));
  out.heatmap = dir / (image.id + "_heatmap.pgm");
  {
    std::ofstream f(out.heatmap, std::ios::binary);
    f << "P5\n" << cols << ' ' << rows << "\n255\n";
    f.write(reinterpret_cast<const char*>(gray.data()), static_cast<std::streamsize>(gray.size()));
    if (!f) throw IoError("cannot write " + out.heatmap.string());
  }

  std::vector<int> cls(image.size(), -1);
  if (image.labeled()) {
    static const unsigned char colors[4][3] = {{255, 0, 0}, {255, 255, 0}, {128, 128, 128}, {0, 0, 255}};
    std::vector<unsigned char> rgb(static_cast<std::size_t>(cols * rows) * 3, 0);
    for (std::size_t j = 0; j < image.size(); ++j) {
      const bool pred = result.prob[j] >= cutoff;
      const bool truth = (*image.labels)[j] != 0;
      const MapClass c = pred ? (truth ? MapClass::TP : MapClass::FP) : (truth ? MapClass::FN : MapClass::TN);
      cls[j] = static_cast<int>(c);
      ++out.counts[static_cast<std::size_t>(c)];
      for (int k = 0; k < 3; ++k) rgb[pixel(j) * 3 + static_cast<std::size_t>(k)] = colors[cls[j]][k];
    }
    out.classes = dir / (image.id + "_classes.ppm");
    std::ofstream f(out.classes, std::ios::binary);
    f << "P6\n" << cols << ' ' << rows << "\n255\n";
    f.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
    if (!f) throw IoError("cannot write " + out.classes.string());
  }

  out.csv = dir / (image.id + "_voxels.csv");
  std::ofstream f(out.csv);
  f << "x_raw,y_raw,region,prob,scaled,label,class\n";
  for (std::size_t j = 0; j < image.size(); ++j) {
    f << format_double(image.raw[j].x) << ',' << format_double(image.raw[j].y) << ',' << int(image.region[j]) << ','
      << format_double(result.prob[j]) << ',' << format_double(scaled(result.prob[j])) << ',';
    if (image.labeled()) f << int((*image.labels)[j]);
    f << ',' << (cls[j] >= 0 ? class_name(static_cast<MapClass>(cls[j])) : "") << '\n';
  }
  if (!f) throw IoError("cannot write " + out.csv.string());
  return out;
}

std::array<std::size_t, 4> read_class_counts(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in) throw IoError("cannot read " + csv.string());
  std::array<std::size_t, 4> counts{0, 0, 0, 0};
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const std::string cls = line.substr(line.rfind(',') + 1);
    for (int c = 0; c < 4; ++c)
      if (cls == class_name(static_cast<MapClass>(c))) ++counts[static_cast<std::size_t>(c)];
  }
  return counts;
}

}  // namespace spvc
