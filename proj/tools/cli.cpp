#include "cli.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "spvc/cv.hpp"
#include "spvc/errors.hpp"
#include "spvc/format.hpp"
#include "spvc/maps.hpp"
#include "spvc/metrics.hpp"
#include "spvc/predict.hpp"
#include "spvc/sampler.hpp"
#include "spvc/simulate.hpp"
#include "spvc_validation/acceptance.hpp"

namespace spvc::cli {

namespace fs = std::filesystem;

Json load_config(const fs::path& path) {
  if (path.empty()) return Json::object();
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": not valid JSON: " + e.what());
  }
}

std::string config_hash(const Json& config) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : config.dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json run_metadata(const std::string& command, const Json& resolved, std::uint64_t seed) {
  return Json{{"command", command},
              {"version", SPVC_VERSION},
              {"config_hash", config_hash(resolved)},
              {"seed", seed},
              {"config", resolved}};
}

int apply_threads(int requested, std::size_t images) {
  int n = requested;
  if (n <= 0) n = std::max(1, std::min(omp_get_num_procs(), static_cast<int>(std::max<std::size_t>(images, 1))));
  omp_set_num_threads(n);
  return n;
}

namespace {

// Meta lines for text outputs: "key: <json>".
std::vector<std::string> meta_lines(const Json& meta) {
  std::vector<std::string> out;
  for (const auto& [k, v] : meta.items()) out.push_back(k + ": " + v.dump());
  return out;
}

void require_out(const Common& c) {
  if (c.out.empty()) throw ConfigError("--out is required");
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void write_json(const Json& j, const fs::path& path) {
  ensure_parent(path);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

// Replaces the listed seed keys ("a.b" addresses a nested key).
void override_seed(Json& cfg, const std::optional<std::uint64_t>& seed, const std::vector<std::string>& keys) {
  if (!seed || !cfg.is_object()) return;
  for (const auto& key : keys) {
    Json* node = &cfg;
    std::string rest = key;
    for (auto dot = rest.find('.'); dot != std::string::npos; dot = rest.find('.')) {
      const std::string head = rest.substr(0, dot);
      if (!node->contains(head) || !(*node)[head].is_object()) (*node)[head] = Json::object();
      node = &(*node)[head];
      rest = rest.substr(dot + 1);
    }
    (*node)[rest] = *seed;
  }
}

std::optional<Dataset> mask_source(JsonReader& r) {
  std::optional<std::string> path;
  if (r.has("mask_source") && !r.raw("mask_source").is_null()) {
    std::string p;
    r.text("mask_source", p);
    path = p;
  } else {
    r.accept("mask_source");
  }
  if (!path) return std::nullopt;
  return load_dataset(*path);
}

}  // namespace

void cmd_simulate(const Common& common) {
  require_out(common);
  Json cfg = load_config(common.config);
  override_seed(cfg, common.seed, {"seed"});
  std::vector<std::string> problems;
  JsonReader r(cfg, "", problems);
  SimScenario sc;
  std::uint64_t seed = defaults::kSeed;
  {
    JsonReader s = r.child("scenario");
    read_scenario(s, sc);
  }
  r.seed("seed", seed);
  const bool has_source = r.has("mask_source") && !r.raw("mask_source").is_null();
  const std::string source_path = has_source && r.raw("mask_source").is_string() ? r.raw("mask_source").get<std::string>() : "";
  const auto source = mask_source(r);
  r.finish();
  throw_if_problems("invalid simulate config", problems);
  sc.validate();

  Json resolved{{"scenario", to_json(sc)}, {"seed", seed}, {"mask_source", has_source ? Json(source_path) : Json()}};
  const Json meta = run_metadata("simulate", resolved, seed);
  apply_threads(common.threads, sc.n_train + sc.n_test);
  const Dataset* src = source ? &*source : nullptr;
  const Dataset train = simulate_dataset(sc, sc.n_train, mix_seed(seed, {1}), src, "train");
  const Dataset test = simulate_dataset(sc, sc.n_test, mix_seed(seed, {2}), src, "test");
  write_dataset(train, common.out / "train", meta_lines(meta));
  write_dataset(test, common.out / "test", meta_lines(meta));
  write_json(meta, common.out / "run.json");
  std::cout << "wrote " << train.images.size() << " training and " << test.images.size() << " test images to "
            << common.out.string() << '\n';
}

void cmd_fit(const Common& common, const fs::path& data_path) {
  require_out(common);
  Json cfg = load_config(common.config);
  override_seed(cfg, common.seed, {"mcmc.seed"});
  std::vector<std::string> problems;
  JsonReader r(cfg, "", problems);
  ModelSpec spec;
  McmcConfig mcmc;
  {
    JsonReader m = r.child("model");
    read_model_spec(m, spec);
  }
  {
    JsonReader m = r.child("mcmc");
    read_mcmc(m, mcmc);
  }
  r.finish();
  throw_if_problems("invalid fit config", problems);
  spec.validate();
  mcmc.validate();

  const Dataset data = load_dataset(data_path);
  const Json resolved{{"data", data_path.string()}, {"model", to_json(spec)}, {"mcmc", to_json(mcmc)}};
  const Json meta = run_metadata("fit", resolved, mcmc.seed);
  apply_threads(common.threads, mcmc.chains);
  const ChainSet cs = fit(data, spec, mcmc);
  ensure_parent(common.out);
  std::map<std::string, std::string> extra;
  for (const auto& [k, v] : meta.items())
    if (k != "version") extra[k] = v.dump();
  write_chainset(cs, common.out, extra);
  std::cout << "wrote " << cs.total_draws() << " draws to " << common.out.string() << '\n';
  std::string worst;
  double worst_rhat = 0.0;
  std::size_t high = 0;
  for (const auto& [k, v] : cs.split_rhat()) {
    if (!std::isfinite(v) || v <= 1.1) continue;
    ++high;
    if (v > worst_rhat) {
      worst_rhat = v;
      worst = k;
    }
  }
  if (high > 0)
    std::cerr << "warning: split R-hat above 1.1 for " << high << " parameters (largest " << worst_rhat << " for "
              << worst << "); consider longer chains\n";
}

void cmd_predict(const Common& common, const fs::path& data_path, const fs::path& chains_path) {
  require_out(common);
  Json cfg = load_config(common.config);
  override_seed(cfg, common.seed, {"predict.seed"});
  std::vector<std::string> problems;
  JsonReader r(cfg, "", problems);
  PredictConfig pc;
  std::optional<double> cutoff;
  bool maps = true;
  {
    JsonReader p = r.child("predict");
    read_predict(p, pc);
  }
  r.optional_number("cutoff", cutoff);
  r.flag("maps", maps);
  r.finish();
  throw_if_problems("invalid predict config", problems);
  pc.validate();

  const Dataset data = load_dataset(data_path);
  const ChainSet cs = read_chainset(chains_path);
  const Json resolved{{"data", data_path.string()},
                      {"chains", chains_path.string()},
                      {"predict", to_json(pc)},
                      {"cutoff", cutoff ? Json(*cutoff) : Json()},
                      {"maps", maps}};
  Json meta = run_metadata("predict", resolved, pc.seed);
  apply_threads(common.threads, data.images.size());
  const auto preds = predict_dataset(data, cs, pc);

  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  Json per_image = Json::array();
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& im = data.images[i];
    Json row{{"image_id", im.id}, {"voxels", im.size()}};
    if (im.labels) {
      scores.insert(scores.end(), preds[i].prob.begin(), preds[i].prob.end());
      labels.insert(labels.end(), im.labels->begin(), im.labels->end());
      const bool both = std::count(im.labels->begin(), im.labels->end(), 1) > 0 &&
                        std::count(im.labels->begin(), im.labels->end(), 0) > 0;
      if (both) {
        const auto s = roc(preds[i].prob, *im.labels);
        row["auc"] = s.auc;
        row["s80"] = s.s80;
      }
    }
    per_image.push_back(row);
  }
  const bool both = std::count(labels.begin(), labels.end(), 1) > 0 && std::count(labels.begin(), labels.end(), 0) > 0;
  const double cut = cutoff ? *cutoff : (both ? threshold_at_specificity(scores, labels) : 0.5);

  fs::create_directories(common.out);
  {
    const fs::path csv = common.out / "predictions.csv";
    std::ofstream out(csv);
    if (!out) throw IoError("cannot write " + csv.string());
    for (const auto& line : meta_lines(meta)) out << "# " << line << '\n';
    out << "image_id,voxel,x_raw,y_raw,region,label,prob\n";
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const auto& im = data.images[i];
      for (std::size_t j = 0; j < im.size(); ++j) {
        out << im.id << ',' << j << ',' << format_double(im.raw[j].x) << ',' << format_double(im.raw[j].y) << ','
            << int(im.region[j]) << ',';
        if (im.labels) out << int((*im.labels)[j]);
        out << ',' << format_double(preds[i].prob[j]) << '\n';
      }
    }
    if (!out) throw IoError("failed writing " + csv.string());
  }
  if (maps) {
    for (std::size_t i = 0; i < preds.size(); ++i) export_maps(preds[i], data.images[i], cut, common.out / "maps");
  }
  Json summary = meta;
  summary["cutoff_used"] = cut;
  summary["images"] = per_image;
  if (both) {
    const auto s = roc(scores, labels);
    summary["pooled_auc"] = s.auc;
    summary["pooled_s80"] = s.s80;
  }
  write_json(summary, common.out / "summary.json");
  std::cout << "predicted " << preds.size() << " images into " << common.out.string() << '\n';
}

void cmd_cv(const Common& common, const fs::path& data_path) {
  require_out(common);
  Json cfg = load_config(common.config);
  override_seed(cfg, common.seed, {"seed", "mcmc.seed", "predict.seed"});
  std::vector<std::string> problems;
  JsonReader r(cfg, "", problems);
  ModelSpec spec;
  McmcConfig mcmc;
  PredictConfig pc;
  std::size_t folds = defaults::kFolds;
  std::uint64_t seed = defaults::kSeed;
  {
    JsonReader m = r.child("model");
    read_model_spec(m, spec);
  }
  {
    JsonReader m = r.child("mcmc");
    read_mcmc(m, mcmc);
  }
  {
    JsonReader p = r.child("predict");
    read_predict(p, pc);
  }
  r.count("folds", folds, 2);
  r.seed("seed", seed);
  r.finish();
  throw_if_problems("invalid cv config", problems);
  spec.validate();
  mcmc.validate();
  pc.validate();

  const Dataset data = load_dataset(data_path);
  const Json resolved{{"data", data_path.string()}, {"model", to_json(spec)}, {"mcmc", to_json(mcmc)},
                      {"predict", to_json(pc)},     {"folds", folds},          {"seed", seed}};
  Json report = run_metadata("cv", resolved, seed);
  apply_threads(common.threads, data.images.size());
  const CvReport cv = kfold_cv(data, folds, spec, mcmc, pc, seed);
  Json fold_rows = Json::array();
  for (const auto& f : cv.folds) {
    Json row{{"test_ids", f.test_ids}, {"flagged", f.flagged()}, {"runtime_s", f.runtime_s},
             {"per_image_auc", f.per_image_auc}};
    if (f.pooled) {
      row["auc"] = f.pooled->auc;
      row["s80"] = f.pooled->s80;
    }
    fold_rows.push_back(row);
  }
  report["folds"] = fold_rows;
  report["mean_auc"] = cv.mean_auc;
  report["mean_s80"] = cv.mean_s80;
  report["mean_per_image_auc"] = cv.mean_per_image_auc;
  write_json(report, common.out);
  std::cout << "mean AUC " << cv.mean_auc << ", mean S80 " << cv.mean_s80 << '\n';
}

void cmd_scenario(const Common& common) {
  require_out(common);
  Json cfg = load_config(common.config);
  override_seed(cfg, common.seed, {"seed"});
  std::vector<std::string> problems;
  JsonReader r(cfg, "", problems);
  SimScenario sc;
  McmcConfig mcmc;
  PredictConfig pc;
  std::size_t reps = 10;
  std::uint64_t seed = defaults::kSeed;
  std::vector<NamedSpec> specs;
  {
    JsonReader s = r.child("scenario");
    read_scenario(s, sc);
  }
  {
    JsonReader m = r.child("mcmc");
    read_mcmc(m, mcmc);
  }
  {
    JsonReader p = r.child("predict");
    read_predict(p, pc);
  }
  r.count("reps", reps, 1);
  r.seed("seed", seed);
  if (r.has("specs")) {
    r.accept("specs");
    const Json& list = r.raw("specs");
    if (!list.is_array() || list.empty()) {
      r.fail("specs", "expected a non-empty array of {name, model}");
    } else {
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string where = "specs[" + std::to_string(i) + "]";
        JsonReader item(list[i], where, problems);
        NamedSpec ns;
        {
          JsonReader m = item.child("model");
          read_model_spec(m, ns.spec);
        }
        ns.name = variant_name(ns.spec.variant);
        item.text("name", ns.name);
        item.finish();
        specs.push_back(ns);
      }
    }
  } else {
    r.accept("specs");
    for (const char* v : {"NNGP+SSE", "SSE", "Base"}) {
      NamedSpec ns;
      ns.spec.variant = *parse_variant(v);
      ns.name = v;
      specs.push_back(ns);
    }
  }
  const bool has_source = r.has("mask_source") && !r.raw("mask_source").is_null();
  const std::string source_path = has_source && r.raw("mask_source").is_string() ? r.raw("mask_source").get<std::string>() : "";
  const auto source = mask_source(r);
  r.finish();
  throw_if_problems("invalid scenario config", problems);
  sc.validate();
  mcmc.validate();
  pc.validate();
  std::vector<std::string> spec_problems;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    try {
      specs[i].spec.validate();
    } catch (const ConfigError& e) {
      spec_problems.push_back("specs[" + std::to_string(i) + "]: " + e.what());
    }
    for (std::size_t j = 0; j < i; ++j)
      if (specs[j].name == specs[i].name) spec_problems.push_back("specs[" + std::to_string(i) + "]: duplicate name " + specs[i].name);
  }
  throw_if_problems("invalid scenario config", spec_problems);

  Json spec_json = Json::array();
  for (const auto& s : specs) spec_json.push_back({{"name", s.name}, {"model", to_json(s.spec)}});
  const Json resolved{{"scenario", to_json(sc)}, {"mcmc", to_json(mcmc)},  {"predict", to_json(pc)},
                      {"reps", reps},            {"seed", seed},          {"specs", spec_json},
                      {"mask_source", has_source ? Json(source_path) : Json()}};
  const Json meta = run_metadata("scenario", resolved, seed);
  apply_threads(common.threads, reps);
  const auto rows = run_scenario(sc, reps, specs, mcmc, pc, seed, source ? &*source : nullptr);
  ensure_parent(common.out);
  write_scenario_csv(rows, common.out, meta_lines(meta));
  for (const auto& [name, s] : summarize(rows))
    std::cout << name << ": mean AUC " << s.mean_auc << " (sd " << s.sd_auc << "), mean S80 " << s.mean_s80
              << " over " << s.reps << " reps\n";
  for (const auto& row : rows)
    if (!row.error.empty()) std::cerr << "warning: rep " << row.rep << " " << row.spec << " failed: " << row.error << '\n';
}

bool cmd_validate(const Common& common, const std::vector<int>& ids, bool verbose) {
  Json cfg = load_config(common.config);
  override_seed(cfg, common.seed, {"seed"});
  std::vector<std::string> problems;
  JsonReader r(cfg, "", problems);
  validation::AcceptanceConfig ac;
  r.seed("seed", ac.seed);
  r.count("reps", ac.reps, 1);
  {
    JsonReader g = r.child("recovery");
    g.count("chains", ac.recovery_chains, 1);
    g.count("iters", ac.recovery_iters, 1);
    g.count("burnin", ac.recovery_burnin, 0);
    g.finish();
  }
  {
    JsonReader g = r.child("scenario");
    g.count("chains", ac.scenario_chains, 1);
    g.count("iters", ac.scenario_iters, 1);
    g.count("burnin", ac.scenario_burnin, 0);
    g.count("predict_max_draws", ac.predict_max_draws, 0);
    g.finish();
  }
  {
    JsonReader g = r.child("geweke");
    g.count("iters", ac.geweke_iters, 1);
    g.count("thin", ac.geweke_thin, 1);
    g.count("forward", ac.geweke_forward, 2);
    g.finish();
  }
  r.finish();
  throw_if_problems("invalid validate config", problems);

  const Json resolved{{"seed", ac.seed},
                      {"reps", ac.reps},
                      {"recovery", {{"chains", ac.recovery_chains}, {"iters", ac.recovery_iters}, {"burnin", ac.recovery_burnin}}},
                      {"scenario",
                       {{"chains", ac.scenario_chains},
                        {"iters", ac.scenario_iters},
                        {"burnin", ac.scenario_burnin},
                        {"predict_max_draws", ac.predict_max_draws}}},
                      {"geweke", {{"iters", ac.geweke_iters}, {"thin", ac.geweke_thin}, {"forward", ac.geweke_forward}}},
                      {"ids", ids.empty() ? validation::criterion_ids() : ids}};
  const Json meta = run_metadata("validate", resolved, ac.seed);
  apply_threads(common.threads, ac.reps);
  std::ofstream report;
  if (!common.out.empty()) {
    ensure_parent(common.out);
    report.open(common.out);
    if (!report) throw IoError("cannot write " + common.out.string());
    for (const auto& line : meta_lines(meta)) report << "# " << line << '\n';
  }
  bool all = true;
  auto log = [&](const std::string& line) {
    if (verbose) std::cerr << line << std::endl;
  };
  for (int id : ids.empty() ? validation::criterion_ids() : ids) {
    const auto res = validation::run_criterion(id, ac, log);
    const std::string line = validation::format_result(res);
    std::cout << line << std::endl;
    if (report.is_open()) report << line << std::endl;
    all = all && res.pass;
  }
  return all;
}

std::vector<std::pair<std::string, std::vector<double>>> read_predictions(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) throw IoError("cannot read " + csv.string());
  std::vector<std::pair<std::string, std::vector<double>>> out;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 7) throw InputError(csv.string() + ": malformed row: " + line);
    if (out.empty() || out.back().first != f[0]) out.emplace_back(f[0], std::vector<double>{});
    out.back().second.push_back(std::stod(f[6]));
  }
  return out;
}

}  // namespace spvc::cli
