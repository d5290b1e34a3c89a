#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "spvc/config.hpp"
#include "spvc/errors.hpp"
#include "spvc/format.hpp"
#include "spvc/sampler.hpp"

namespace spvc {

namespace {

constexpr const char* kFormat = "spvc-chains/1";

}  // namespace

void write_chainset(const ChainSet& cs, const std::filesystem::path& path,
                    const std::map<std::string, std::string>& extra_meta) {
  cs.validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  Json seeds = Json::array(), acceptance = Json::array();
  for (const auto& c : cs.chains) {
    seeds.push_back(c.seed);
    acceptance.push_back({c.acceptance[0], c.acceptance[1]});
  }
  Json rhat = Json::object();
  for (const auto& [k, v] : cs.split_rhat())
    if (std::isfinite(v)) rhat[k] = v;
  out << "# format: " << Json(kFormat).dump() << '\n';
  out << "# version: " << Json(SPVC_VERSION).dump() << '\n';
  for (const auto& [k, v] : extra_meta) {
    if (!Json::accept(v)) throw InputError("chain metadata '" + k + "' is not JSON text");
    out << "# " << k << ": " << Json::parse(v).dump() << '\n';
  }
  out << "# spec: " << to_json(cs.spec).dump() << '\n';
  out << "# mcmc: " << to_json(cs.mcmc).dump() << '\n';
  out << "# image_ids: " << Json(cs.image_ids).dump() << '\n';
  out << "# feature_names: " << Json(cs.feature_names).dump() << '\n';
  out << "# chain_seeds: " << seeds.dump() << '\n';
  out << "# acceptance: " << acceptance.dump() << '\n';
  out << "# split_rhat: " << rhat.dump() << '\n';
  out << "chain,draw";
  for (const auto& n : cs.scalar_names()) out << ',' << n;
  out << '\n';
  for (std::size_t c = 0; c < cs.chains.size(); ++c) {
    const auto& draws = cs.chains[c].draws;
    for (std::size_t k = 0; k < draws.size(); ++k) {
      out << c << ',' << k;
      for (double v : cs.scalars(draws[k])) out << ',' << format_double(v);
      out << '\n';
    }
  }
  if (!out) throw IoError("failed writing " + path.string());
}

ChainSet read_chainset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  ChainSet cs;
  std::map<std::string, Json> meta;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] != '#') break;
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw InputError(path.string() + " line " + std::to_string(line_no) + ": bad metadata");
    const std::string key = line.substr(2, colon - 2);
    try {
      meta[key] = Json::parse(line.substr(colon + 1));
    } catch (const Json::exception& e) {
      throw InputError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!meta.count("format") || meta["format"] != kFormat) throw InputError(path.string() + ": not a chain file");
  for (const char* k : {"spec", "mcmc", "image_ids", "feature_names", "chain_seeds", "acceptance"})
    if (!meta.count(k)) throw InputError(path.string() + ": missing metadata '" + k + "'");
  cs.spec = model_spec_from_json(meta["spec"]);
  cs.mcmc = mcmc_from_json(meta["mcmc"]);
  cs.image_ids = meta["image_ids"].get<std::vector<std::string>>();
  cs.feature_names = meta["feature_names"].get<std::vector<std::string>>();
  const auto seeds = meta["chain_seeds"].get<std::vector<std::uint64_t>>();
  const auto acc = meta["acceptance"].get<std::vector<std::array<double, 2>>>();
  if (seeds.size() != acc.size()) throw InputError(path.string() + ": inconsistent chain metadata");
  cs.chains.resize(seeds.size());
  for (std::size_t c = 0; c < seeds.size(); ++c) {
    cs.chains[c].seed = seeds[c];
    cs.chains[c].acceptance = acc[c];
  }

  const auto names = cs.scalar_names();
  std::string expected = "chain,draw";
  for (const auto& n : names) expected += "," + n;
  if (line != expected) throw InputError(path.string() + " line " + std::to_string(line_no) + ": unexpected header");
  std::vector<double> row(names.size());
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != names.size() + 2)
      throw InputError(path.string() + " line " + std::to_string(line_no) + ": " + std::to_string(cells.size()) +
                       " fields, expected " + std::to_string(names.size() + 2));
    std::size_t chain = 0;
    bool ok = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), chain).ec == std::errc();
    for (std::size_t k = 0; k < names.size() && ok; ++k) {
      const std::string& c = cells[k + 2];
      ok = std::from_chars(c.data(), c.data() + c.size(), row[k]).ec == std::errc();
    }
    if (!ok) throw InputError(path.string() + " line " + std::to_string(line_no) + ": malformed number");
    if (chain >= cs.chains.size()) throw InputError(path.string() + " line " + std::to_string(line_no) + ": bad chain");
    cs.chains[chain].draws.push_back(cs.from_scalars(row));
  }
  cs.validate();
  return cs;
}

}  // namespace spvc
