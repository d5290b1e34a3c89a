#include "spvc/config.hpp"

#include <algorithm>
#include <cmath>

#include "spvc/errors.hpp"

namespace spvc {

JsonReader::JsonReader(const Json& object, std::string path, std::vector<std::string>& problems)
    : object_(object), path_(std::move(path)), problems_(problems) {
  if (!object_.is_object()) fail("", "expected an object");
}

void JsonReader::fail(const std::string& key, const std::string& message) {
  std::string where = path_;
  if (!key.empty()) where += where.empty() ? key : "." + key;
  problems_.push_back((where.empty() ? std::string("config") : where) + ": " + message);
}

bool JsonReader::has(const char* key) const { return object_.is_object() && object_.contains(key); }

const Json* JsonReader::get(const char* key) {
  seen_.emplace_back(key);
  if (!has(key)) return nullptr;
  return &object_.at(key);
}

void JsonReader::number(const char* key, double& out, bool positive) {
  const Json* v = get(key);
  if (!v) return;
  if (!v->is_number()) return fail(key, "expected a number");
  const double x = v->get<double>();
  if (!std::isfinite(x)) return fail(key, "must be finite");
  if (positive && !(x > 0.0)) return fail(key, "must be positive");
  out = x;
}

void JsonReader::count(const char* key, std::size_t& out, std::size_t min) {
  const Json* v = get(key);
  if (!v) return;
  if (!v->is_number_integer() || v->get<long long>() < static_cast<long long>(min))
    return fail(key, "expected an integer >= " + std::to_string(min));
  out = v->get<std::size_t>();
}

void JsonReader::seed(const char* key, std::uint64_t& out) {
  const Json* v = get(key);
  if (!v) return;
  if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<long long>() < 0))
    return fail(key, "expected a non-negative integer");
  out = v->get<std::uint64_t>();
}

void JsonReader::text(const char* key, std::string& out) {
  const Json* v = get(key);
  if (!v) return;
  if (!v->is_string()) return fail(key, "expected a string");
  out = v->get<std::string>();
}

void JsonReader::flag(const char* key, bool& out) {
  const Json* v = get(key);
  if (!v) return;
  if (!v->is_boolean()) return fail(key, "expected true or false");
  out = v->get<bool>();
}

void JsonReader::optional_number(const char* key, std::optional<double>& out) {
  const Json* v = get(key);
  if (!v || v->is_null()) return;
  if (!v->is_number()) return fail(key, "expected a number or null");
  out = v->get<double>();
}

JsonReader JsonReader::child(const char* key) {
  seen_.emplace_back(key);
  static const Json empty = Json::object();
  const std::string sub = path_.empty() ? key : path_ + "." + key;
  if (!has(key)) return JsonReader(empty, sub, problems_);
  return JsonReader(object_.at(key), sub, problems_);
}

void JsonReader::finish() {
  if (!object_.is_object()) return;
  for (const auto& [k, v] : object_.items()) {
    (void)v;
    if (std::find(seen_.begin(), seen_.end(), k) == seen_.end()) fail(k, "unknown key");
  }
}

Json to_json(const MaternParams& t) { return Json{{"sigma2", t.sigma2}, {"phi", t.phi}, {"nu", t.nu}}; }

Json to_json(const Hyperpriors& h) {
  return Json{{"mu_prior_var", h.mu_prior_var}, {"gamma_df_extra", h.gamma_df_extra},
              {"gamma_scale", h.gamma_scale},   {"sigma_df_extra", h.sigma_df_extra},
              {"sigma_scale", h.sigma_scale},   {"sigma2_min", h.sigma2_min},
              {"sigma2_max", h.sigma2_max},     {"phi_min", h.phi_min},
              {"phi_max", h.phi_max},           {"nu_min", h.nu_min},
              {"nu_max", h.nu_max}};
}

Json to_json(const ModelSpec& s) {
  Json j{{"variant", variant_name(s.variant)},
         {"m", s.m},
         {"a", s.a},
         {"alpha_car", s.alpha_car},
         {"car_cutoff", s.car_cutoff ? Json(*s.car_cutoff) : Json(nullptr)},
         {"hyperpriors", to_json(s.hyper)},
         {"theta_init", to_json(s.theta_init)},
         {"theta_fixed", s.theta_fixed ? to_json(*s.theta_fixed) : Json(nullptr)},
         {"smoothing_bandwidth", s.smoothing_bandwidth ? Json(*s.smoothing_bandwidth) : Json(nullptr)},
         {"dense_limit", s.dense_limit}};
  return j;
}

Json to_json(const McmcConfig& m) {
  return Json{{"chains", m.chains}, {"iters", m.iters}, {"burnin", m.burnin}, {"thin", m.thin}, {"seed", m.seed}};
}

Json to_json(const PredictConfig& p) {
  return Json{{"inner_sweeps", p.inner_sweeps}, {"inner_burn", p.inner_burn}, {"max_draws", p.max_draws},
              {"seed", p.seed}};
}

namespace {

const char* const kStrata[4] = {"c0_r0", "c0_r1", "c1_r0", "c1_r1"};

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

void read_matrix(JsonReader& r, const char* key, Eigen::MatrixXd& out) {
  if (!r.has(key)) return r.accept(key);
  r.accept(key);
  const Json& v = r.raw(key);
  const auto bad = [&] { r.fail(key, "expected a non-empty array of equal-length numeric rows"); };
  if (!v.is_array() || v.empty() || !v[0].is_array()) return bad();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(v[0].size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_array() || v[i].size() != v[0].size()) return bad();
    for (std::size_t j = 0; j < v[i].size(); ++j) {
      if (!v[i][j].is_number()) return bad();
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[i][j].get<double>();
    }
  }
  out = m;
}

void read_vector(JsonReader& r, const char* key, Eigen::VectorXd& out) {
  if (!r.has(key)) return r.accept(key);
  r.accept(key);
  const Json& v = r.raw(key);
  if (!v.is_array() || v.empty()) return r.fail(key, "expected a non-empty numeric array");
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) return r.fail(key, "expected a non-empty numeric array");
    x[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  out = x;
}

}  // namespace

Json to_json(const BaseParams& b) {
  Json mu = Json::object(), gamma = Json::object();
  for (int s = 0; s < 4; ++s) {
    mu[kStrata[s]] = std::vector<double>(b.mu[s].data(), b.mu[s].data() + b.mu[s].size());
    gamma[kStrata[s]] = matrix_json(b.gamma[s]);
  }
  return Json{{"feature_names", b.feature_names},
              {"mu", mu},
              {"gamma", gamma},
              {"sigma", matrix_json(b.sigma)},
              {"prevalence_cg", b.prevalence[0]},
              {"prevalence_pz", b.prevalence[1]}};
}

Json to_json(const SimScenario& s) {
  return Json{{"name", s.name},
              {"theta", to_json(s.theta)},
              {"n_train", s.n_train},
              {"n_test", s.n_test},
              {"spatial_kind", s.kind == SpatialScenario::Matern ? "matern" : "matern_mixture"},
              {"base", to_json(s.base)}};
}

void read_theta(JsonReader& r, MaternParams& out) {
  r.number("sigma2", out.sigma2, true);
  r.number("phi", out.phi, true);
  r.number("nu", out.nu, true);
  r.finish();
}

void read_model_spec(JsonReader& r, ModelSpec& out) {
  std::string name = variant_name(out.variant);
  r.text("variant", name);
  if (auto v = parse_variant(name)) {
    out.variant = *v;
  } else {
    std::string allowed;
    for (const auto& n : variant_names()) allowed += (allowed.empty() ? "" : ", ") + n;
    r.fail("variant", "unknown variant '" + name + "'; allowed: " + allowed);
  }
  r.count("m", out.m, 1);
  r.count("a", out.a, 1);
  r.number("alpha_car", out.alpha_car);
  r.optional_number("car_cutoff", out.car_cutoff);
  r.optional_number("smoothing_bandwidth", out.smoothing_bandwidth);
  r.count("dense_limit", out.dense_limit, 1);
  {
    JsonReader h = r.child("hyperpriors");
    auto& hp = out.hyper;
    h.number("mu_prior_var", hp.mu_prior_var, true);
    h.number("gamma_df_extra", hp.gamma_df_extra, true);
    h.number("gamma_scale", hp.gamma_scale, true);
    h.number("sigma_df_extra", hp.sigma_df_extra, true);
    h.number("sigma_scale", hp.sigma_scale, true);
    h.number("sigma2_min", hp.sigma2_min, true);
    h.number("sigma2_max", hp.sigma2_max, true);
    h.number("phi_min", hp.phi_min, true);
    h.number("phi_max", hp.phi_max, true);
    h.number("nu_min", hp.nu_min, true);
    h.number("nu_max", hp.nu_max, true);
    h.finish();
  }
  {
    JsonReader t = r.child("theta_init");
    read_theta(t, out.theta_init);
  }
  if (r.has("theta_fixed") && !r.raw("theta_fixed").is_null()) {
    MaternParams fixed = out.theta_init;
    JsonReader t = r.child("theta_fixed");
    read_theta(t, fixed);
    out.theta_fixed = fixed;
  } else {
    r.accept("theta_fixed");
  }
  r.finish();
}

void read_mcmc(JsonReader& r, McmcConfig& out) {
  r.count("chains", out.chains, 1);
  r.count("iters", out.iters, 1);
  r.count("burnin", out.burnin, 0);
  r.count("thin", out.thin, 1);
  r.seed("seed", out.seed);
  r.finish();
}

void read_predict(JsonReader& r, PredictConfig& out) {
  r.count("inner_sweeps", out.inner_sweeps, 1);
  r.count("inner_burn", out.inner_burn, 0);
  r.count("max_draws", out.max_draws, 0);
  r.seed("seed", out.seed);
  r.finish();
}

void read_base_params(JsonReader& r, BaseParams& out) {
  if (r.has("feature_names") && r.raw("feature_names").is_array()) {
    r.accept("feature_names");
    std::vector<std::string> names;
    for (const auto& v : r.raw("feature_names")) {
      if (!v.is_string()) {
        r.fail("feature_names", "expected an array of strings");
        names.clear();
        break;
      }
      names.push_back(v.get<std::string>());
    }
    if (!names.empty()) out.feature_names = names;
  } else if (r.has("feature_names")) {
    r.accept("feature_names");
    r.fail("feature_names", "expected an array of strings");
  } else {
    r.accept("feature_names");
  }
  {
    JsonReader mu = r.child("mu");
    for (int s = 0; s < 4; ++s) read_vector(mu, kStrata[s], out.mu[s]);
    mu.finish();
  }
  {
    JsonReader gamma = r.child("gamma");
    for (int s = 0; s < 4; ++s) read_matrix(gamma, kStrata[s], out.gamma[s]);
    gamma.finish();
  }
  read_matrix(r, "sigma", out.sigma);
  r.number("prevalence_cg", out.prevalence[0]);
  r.number("prevalence_pz", out.prevalence[1]);
  r.finish();
}

void read_scenario(JsonReader& r, SimScenario& out) {
  r.text("name", out.name);
  {
    JsonReader t = r.child("theta");
    read_theta(t, out.theta);
  }
  r.count("n_train", out.n_train, 1);
  r.count("n_test", out.n_test, 1);
  std::string kind = out.kind == SpatialScenario::Matern ? "matern" : "matern_mixture";
  r.text("spatial_kind", kind);
  if (kind == "matern") {
    out.kind = SpatialScenario::Matern;
  } else if (kind == "matern_mixture") {
    out.kind = SpatialScenario::MaternMixture;
  } else {
    r.fail("spatial_kind", "unknown kind '" + kind + "'; allowed: matern, matern_mixture");
  }
  {
    JsonReader b = r.child("base");
    read_base_params(b, out.base);
  }
  r.finish();
}

void throw_if_problems(const std::string& what, const std::vector<std::string>& problems) {
  if (problems.empty()) return;
  std::string msg = what + ":";
  for (const auto& p : problems) msg += "\n  - " + p;
  throw ConfigError(msg);
}

ModelSpec model_spec_from_json(const Json& j) {
  std::vector<std::string> problems;
  ModelSpec out;
  JsonReader r(j, "", problems);
  read_model_spec(r, out);
  throw_if_problems("invalid model spec", problems);
  out.validate();
  return out;
}

McmcConfig mcmc_from_json(const Json& j) {
  std::vector<std::string> problems;
  McmcConfig out;
  JsonReader r(j, "", problems);
  read_mcmc(r, out);
  throw_if_problems("invalid mcmc settings", problems);
  out.validate();
  return out;
}

}  // namespace spvc
