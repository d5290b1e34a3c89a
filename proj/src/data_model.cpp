#include "spvc/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "spvc/errors.hpp"
#include "spvc/format.hpp"

namespace spvc {

namespace {

struct AxisRange {
  double lo;
  double hi;
};

AxisRange axis_range(const Coords& pts, double Point::*axis) {
  AxisRange r{pts.front().*axis, pts.front().*axis};
  for (const auto& p : pts) {
    r.lo = std::min(r.lo, p.*axis);
    r.hi = std::max(r.hi, p.*axis);
  }
  return r;
}

// Written so that the extremes land exactly on -1 and +1.
double map_axis(double v, const AxisRange& r) { return ((v - r.lo) - (r.hi - v)) / (r.hi - r.lo); }

void check_distinct(const Coords& pts, const std::string& what) {
  std::vector<std::size_t> idx(pts.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return pts[a].x < pts[b].x || (pts[a].x == pts[b].x && pts[a].y < pts[b].y);
  });
  for (std::size_t k = 1; k < idx.size(); ++k) {
    if (pts[idx[k]] == pts[idx[k - 1]]) {
      std::ostringstream msg;
      msg << what << ": voxels " << idx[k - 1] << " and " << idx[k] << " share coordinates ("
          << pts[idx[k]].x << ", " << pts[idx[k]].y << ")";
      throw InputError(msg.str());
    }
  }
}

// Lattice index of each raw value along one axis.
std::vector<long> lattice_index(const Coords& pts, double Point::*axis, const std::string& id,
                                const char* axis_name) {
  std::vector<double> values;
  values.reserve(pts.size());
  for (const auto& p : pts) values.push_back(p.*axis);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  if (values.size() < 2) {
    throw InputError("downsample_third(" + id + "): fewer than two distinct " + axis_name +
                     " values, no lattice");
  }
  double step = values[1] - values[0];
  for (std::size_t k = 2; k < values.size(); ++k) step = std::min(step, values[k] - values[k - 1]);
  const double lo = values.front();
  std::vector<long> out;
  out.reserve(pts.size());
  for (const auto& p : pts) {
    const double t = (p.*axis - lo) / step;
    const double r = std::round(t);
    if (std::abs(t - r) > 1e-6) {
      std::ostringstream msg;
      msg << "downsample_third(" << id << "): " << axis_name << " value " << p.*axis
          << " is off the lattice with step " << step;
      throw InputError(msg.str());
    }
    out.push_back(static_cast<long>(r));
  }
  return out;
}

}  // namespace

Coords normalize_coords(const Coords& raw) {
  if (raw.size() < 2) throw InputError("normalize_coords: need at least two points");
  for (const auto& p : raw) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw InputError("normalize_coords: non-finite coordinate");
  }
  const AxisRange rx = axis_range(raw, &Point::x);
  const AxisRange ry = axis_range(raw, &Point::y);
  if (!(rx.hi > rx.lo)) throw InputError("normalize_coords: x axis has zero spread");
  if (!(ry.hi > ry.lo)) throw InputError("normalize_coords: y axis has zero spread");
  Coords out;
  out.reserve(raw.size());
  for (const auto& p : raw) out.push_back({map_axis(p.x, rx), map_axis(p.y, ry)});
  return out;
}

bool VoxelImage::complete(std::size_t voxel) const {
  const auto row = features.row(static_cast<Eigen::Index>(voxel));
  return !row.array().isNaN().any();
}

VoxelImage make_image(std::string id, Coords raw, std::vector<std::uint8_t> region,
                      Eigen::MatrixXd features, std::optional<std::vector<std::uint8_t>> labels) {
  const std::size_t n = raw.size();
  if (n == 0) throw InputError("image " + id + ": no voxels");
  if (region.size() != n || static_cast<std::size_t>(features.rows()) != n ||
      (labels && labels->size() != n)) {
    throw InputError("image " + id + ": per-voxel lists have different lengths");
  }
  if (features.cols() < 1) throw InputError("image " + id + ": feature dimension must be >= 1");
  for (auto r : region) {
    if (r > 1) throw InputError("image " + id + ": region flags must be 0 or 1");
  }
  if (labels) {
    for (auto c : *labels) {
      if (c > 1) throw InputError("image " + id + ": labels must be 0 or 1");
    }
  }
  if (features.array().isInf().any()) throw InputError("image " + id + ": infinite feature value");
  check_distinct(raw, "image " + id);

  VoxelImage img;
  img.id = std::move(id);
  img.coords = normalize_coords(raw);
  img.raw = std::move(raw);
  img.region = std::move(region);
  img.features = std::move(features);
  img.labels = std::move(labels);
  return img;
}

VoxelImage subset_image(const VoxelImage& image, const std::vector<std::size_t>& keep) {
  Coords raw;
  std::vector<std::uint8_t> region;
  Eigen::MatrixXd feats(static_cast<Eigen::Index>(keep.size()), image.dim());
  std::optional<std::vector<std::uint8_t>> labels;
  if (image.labels) labels.emplace();
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const std::size_t j = keep[k];
    raw.push_back(image.raw[j]);
    region.push_back(image.region[j]);
    feats.row(static_cast<Eigen::Index>(k)) = image.features.row(static_cast<Eigen::Index>(j));
    if (labels) labels->push_back((*image.labels)[j]);
  }
  return make_image(image.id, std::move(raw), std::move(region), std::move(feats), std::move(labels));
}

VoxelImage downsample_third(const VoxelImage& image) {
  const auto col = lattice_index(image.raw, &Point::x, image.id, "x");
  const auto row = lattice_index(image.raw, &Point::y, image.id, "y");
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < image.size(); ++j) {
    if (row[j] % 3 == 0 && col[j] % 3 == 0) keep.push_back(j);
  }
  return subset_image(image, keep);
}

VoxelImage strip_labels(const VoxelImage& image) {
  VoxelImage out = image;
  out.labels.reset();
  return out;
}

void Dataset::validate() const {
  std::set<std::string> ids;
  for (const auto& img : images) {
    if (!ids.insert(img.id).second) throw InputError("dataset: duplicate image id '" + img.id + "'");
    if (img.dim() != dim()) {
      std::ostringstream msg;
      msg << "dataset: image " << img.id << " has " << img.dim() << " features, expected " << dim();
      throw InputError(msg.str());
    }
  }
}

// ---------------------------------------------------------------------------
// On-disk format

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& text, const std::string& where) {
  const std::string t = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw InputError(where + ": cannot parse number '" + t + "'");
  return v;
}

std::uint8_t parse_flag(const std::string& text, const std::string& where) {
  const std::string t = trim(text);
  if (t == "0") return 0;
  if (t == "1") return 1;
  throw InputError(where + ": expected 0 or 1, got '" + t + "'");
}

VoxelImage read_image_csv(const std::filesystem::path& file, const std::string& id,
                          const std::vector<std::string>& feature_names) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open image file " + file.string());
  const std::size_t d = feature_names.size();
  std::string line;
  if (!std::getline(in, line)) throw InputError(file.string() + ": empty file");
  const auto header = split(line, ',');
  if (header.size() != 4 + d) {
    std::ostringstream msg;
    msg << file.string() << " line 1: header has " << header.size() << " columns, expected "
        << 4 + d << " (x_raw,y_raw,region,label + " << d << " features)";
    throw InputError(msg.str());
  }
  Coords raw;
  std::vector<std::uint8_t> region;
  std::vector<std::uint8_t> labels;
  std::vector<double> values;
  std::size_t labeled_rows = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = file.string() + " line " + std::to_string(lineno);
    const auto fields = split(line, ',');
    if (fields.size() != 4 + d) {
      std::ostringstream msg;
      msg << where << ": " << fields.size() << " fields, expected " << 4 + d;
      throw InputError(msg.str());
    }
    raw.push_back({parse_number(fields[0], where), parse_number(fields[1], where)});
    region.push_back(parse_flag(fields[2], where));
    if (trim(fields[3]).empty()) {
      labels.push_back(0);
    } else {
      labels.push_back(parse_flag(fields[3], where));
      ++labeled_rows;
    }
    for (std::size_t k = 0; k < d; ++k) {
      const std::string t = trim(fields[4 + k]);
      values.push_back(t.empty() ? std::nan("") : parse_number(t, where));
    }
  }
  const std::size_t n = raw.size();
  if (labeled_rows != 0 && labeled_rows != n)
    throw InputError(file.string() + ": labels must be present on all rows or none");
  Eigen::MatrixXd feats(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < d; ++k)
      feats(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = values[j * d + k];
  std::optional<std::vector<std::uint8_t>> lab;
  if (labeled_rows == n) lab = std::move(labels);
  return make_image(id, std::move(raw), std::move(region), std::move(feats), std::move(lab));
}

}  // namespace

void write_dataset(const Dataset& data, const std::filesystem::path& dir,
                   const std::vector<std::string>& header_comments) {
  data.validate();
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.txt");
  if (!manifest) throw IoError("cannot write manifest in " + dir.string());
  manifest << "# spvc dataset manifest\n";
  for (const auto& c : header_comments) manifest << "# " << c << "\n";
  manifest << "format = spvc-dataset/1\n";
  manifest << "features = ";
  for (std::size_t k = 0; k < data.feature_names.size(); ++k)
    manifest << (k ? "," : "") << data.feature_names[k];
  manifest << "\n";
  for (const auto& img : data.images) {
    const std::string file = img.id + ".csv";
    manifest << "image = " << img.id << " " << file << "\n";
    std::ofstream out(dir / file);
    if (!out) throw IoError("cannot write " + (dir / file).string());
    out << "x_raw,y_raw,region,label";
    for (const auto& f : data.feature_names) out << "," << f;
    out << "\n";
    for (std::size_t j = 0; j < img.size(); ++j) {
      out << format_double(img.raw[j].x) << "," << format_double(img.raw[j].y) << ","
          << int(img.region[j]) << ",";
      if (img.labels) out << int((*img.labels)[j]);
      for (Eigen::Index k = 0; k < img.dim(); ++k) {
        out << ",";
        const double v = img.features(static_cast<Eigen::Index>(j), k);
        if (!std::isnan(v)) out << format_double(v);
      }
      out << "\n";
    }
  }
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::filesystem::path manifest_path = path;
  if (std::filesystem::is_directory(path)) manifest_path = path / "manifest.txt";
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest " + manifest_path.string());
  const auto base = manifest_path.parent_path();
  Dataset data;
  std::vector<std::pair<std::string, std::string>> entries;
  bool have_features = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    const std::string where = manifest_path.string() + " line " + std::to_string(lineno);
    if (eq == std::string::npos) throw InputError(where + ": expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key == "format") {
      if (value != "spvc-dataset/1") throw InputError(where + ": unsupported format '" + value + "'");
    } else if (key == "features") {
      data.feature_names.clear();
      for (auto& f : split(value, ',')) data.feature_names.push_back(trim(f));
      have_features = true;
    } else if (key == "image") {
      std::istringstream ss(value);
      std::string id, file;
      if (!(ss >> id >> file)) throw InputError(where + ": expected 'image = <id> <file>'");
      entries.emplace_back(id, file);
    } else {
      throw InputError(where + ": unknown key '" + key + "'");
    }
  }
  if (!have_features || data.feature_names.empty())
    throw InputError(manifest_path.string() + ": missing 'features' entry");
  std::set<std::string> seen;
  for (const auto& [id, file] : entries) {
    if (!seen.insert(id).second) throw InputError(manifest_path.string() + ": duplicate image id '" + id + "'");
    data.images.push_back(read_image_csv(base / file, id, data.feature_names));
  }
  data.validate();
  return data;
}

}  // namespace spvc
