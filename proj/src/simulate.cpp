#include "spvc/simulate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <fstream>
#include <iostream>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "spvc/cv.hpp"
#include "spvc/errors.hpp"
#include "spvc/format.hpp"
#include "spvc/full_gp.hpp"
#include "spvc/linalg.hpp"
#include "spvc/metrics.hpp"

namespace spvc {

namespace {

Eigen::MatrixXd equicorrelation(Eigen::Index d, double rho) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Constant(d, d, rho);
  r.diagonal().setOnes();
  return r;
}

std::vector<long> axis_index(const Coords& pts, double Point::*axis) {
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
  for (const auto& p : pts) out.push_back(std::lround((p.*axis - v.front()) / step));
  return out;
}

Eigen::VectorXd sample_mvn(const Eigen::MatrixXd& cov, Stream& rng) {
  if (cov.isZero(0.0)) return Eigen::VectorXd::Zero(cov.rows());
  const SpdFactor f = factor_spd(cov, cov.diagonal().maxCoeff());
  return f.llt.matrixL() * standard_normal_vector(cov.rows(), rng);
}

VoxelImage forward(const Mask& mask, const BaseParams& base, const Eigen::VectorXd& w, Stream& rng, std::string id) {
  const auto q0 = generator_q0(base);
  const Eigen::Index d = base.dim();
  const Eigen::VectorXd delta = sample_mvn(base.sigma, rng);
  std::array<Eigen::MatrixXd, 4> chol;
  for (int s = 0; s < 4; ++s) chol[s] = factor_spd(base.gamma[s], base.gamma[s].diagonal().maxCoeff()).matrix_l();
  const std::size_t n = mask.raw.size();
  Eigen::MatrixXd y(static_cast<Eigen::Index>(n), d);
  std::vector<std::uint8_t> labels(n);
  for (std::size_t j = 0; j < n; ++j) {
    const int r = mask.region[j];
    const double kappa = q0[r] + w[static_cast<Eigen::Index>(j)] + rng.normal();
    labels[j] = kappa > 0.0 ? 1 : 0;
    const int s = stratum(labels[j], r);
    y.row(static_cast<Eigen::Index>(j)) = (base.mu[s] + delta + chol[s] * standard_normal_vector(d, rng)).transpose();
  }
  return make_image(std::move(id), mask.raw, mask.region, std::move(y), std::move(labels));
}

}  // namespace

void BaseParams::validate() const {
  std::vector<std::string> problems;
  const Eigen::Index d = dim();
  if (d < 1) problems.push_back("at least one feature is required");
  for (int s = 0; s < 4; ++s) {
    const std::string tag = "stratum (c=" + std::to_string(s / 2) + ", r=" + std::to_string(s % 2) + ")";
    if (mu[s].size() != d) problems.push_back(tag + ": mu has the wrong length");
    if (gamma[s].rows() != d || gamma[s].cols() != d) {
      problems.push_back(tag + ": gamma has the wrong shape");
    } else if (!gamma[s].isApprox(gamma[s].transpose()) || gamma[s].llt().info() != Eigen::Success) {
      problems.push_back(tag + ": gamma is not symmetric positive definite");
    }
  }
  if (sigma.rows() != d || sigma.cols() != d) {
    problems.push_back("sigma has the wrong shape");
  } else if (!sigma.isZero(0.0) && (!sigma.isApprox(sigma.transpose()) || sigma.llt().info() != Eigen::Success)) {
    problems.push_back("sigma must be zero or symmetric positive definite");
  }
  for (int r = 0; r < 2; ++r)
    if (!(prevalence[r] > 0.0 && prevalence[r] < 1.0)) problems.push_back("prevalences must lie in (0, 1)");
  if (!problems.empty()) {
    std::string msg = "invalid base parameters:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
}

BaseParams default_base_params() {
  BaseParams b;
  b.feature_names = {"adc", "augc90", "ktrans", "kep"};
  const Eigen::Index d = static_cast<Eigen::Index>(defaults::kFeatureDim);
  const Eigen::MatrixXd r = equicorrelation(d, defaults::kFeatureCorrelation);
  // cancer lowers diffusion and raises the perfusion features
  const Eigen::Vector4d shift(-1.0, 1.0, 1.0, 1.0);
  const Eigen::Vector4d cg(0.3, -0.2, 0.0, 0.1);
  const Eigen::Vector4d pz = Eigen::Vector4d::Zero();
  b.mu[stratum(0, 0)] = cg;
  b.mu[stratum(0, 1)] = pz;
  b.mu[stratum(1, 0)] = cg + defaults::kClassSeparationCG * shift;
  b.mu[stratum(1, 1)] = pz + defaults::kClassSeparationPZ * shift;
  b.gamma[stratum(0, 0)] = r;
  b.gamma[stratum(0, 1)] = r;
  b.gamma[stratum(1, 0)] = defaults::kCancerVarianceScale * r;
  b.gamma[stratum(1, 1)] = defaults::kCancerVarianceScale * r;
  b.sigma = defaults::kSubjectScale * r;
  return b;
}

std::array<double, 2> generator_q0(const BaseParams& base) {
  const boost::math::normal n;
  return {boost::math::quantile(n, base.prevalence[0]), boost::math::quantile(n, base.prevalence[1])};
}

Mask synthetic_mask(std::uint64_t seed) {
  Stream rng(seed, {0x6d61736bu});
  const double ax = 1.3 + 0.25 * rng.uniform();
  const double ay = 1.15 + 0.25 * rng.uniform();
  const double inner = 0.6;
  const double step = defaults::kMaskStep;
  const long nx = static_cast<long>(std::ceil(ax / step)), ny = static_cast<long>(std::ceil(ay / step));
  Mask m;
  m.name = "ellipse-" + std::to_string(seed);
  for (long j = -ny; j <= ny; ++j) {
    for (long i = -nx; i <= nx; ++i) {
      const double x = static_cast<double>(i) * step, y = static_cast<double>(j) * step;
      const double e = (x / ax) * (x / ax) + (y / ay) * (y / ay);
      if (e > 1.0) continue;
      m.raw.push_back({static_cast<double>(i + nx) * step, static_cast<double>(j + ny) * step});
      m.region.push_back(e <= inner * inner ? 0 : 1);
    }
  }
  return m;
}

Mask reduce_mask(const Mask& mask) {
  const auto col = axis_index(mask.raw, &Point::x);
  const auto row = axis_index(mask.raw, &Point::y);
  Mask out;
  out.name = mask.name;
  for (std::size_t j = 0; j < mask.raw.size(); ++j) {
    if (col[j] % 3 != 0 || row[j] % 3 != 0) continue;
    out.raw.push_back(mask.raw[j]);
    out.region.push_back(mask.region[j]);
  }
  return out;
}

std::vector<Mask> make_masks(const Dataset* source, std::size_t count, std::uint64_t seed, bool reduce) {
  std::vector<Mask> out;
  Stream rng(seed, {0x706963u});
  if (source && source->images.empty()) throw InputError("mask source dataset is empty");
  for (std::size_t k = 0; k < count; ++k) {
    Mask m;
    if (source) {
      const VoxelImage& im = source->images[rng.next() % source->images.size()];
      m = Mask{im.id, im.raw, im.region};
    } else {
      m = synthetic_mask(mix_seed(seed, {static_cast<std::uint64_t>(k)}));
    }
    out.push_back(reduce ? reduce_mask(m) : std::move(m));
  }
  return out;
}

void SimScenario::validate() const {
  std::vector<std::string> problems;
  try {
    theta.validate();
  } catch (const Error& e) {
    problems.push_back(e.what());
  }
  if (n_train < 1) problems.push_back("n_train must be at least 1");
  try {
    base.validate();
  } catch (const Error& e) {
    problems.push_back(e.what());
  }
  if (!problems.empty()) {
    std::string msg = "invalid scenario '" + name + "':";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
}

VoxelImage simulate_image(const Mask& mask, const SimScenario& scenario, std::uint64_t seed, std::string id) {
  if (scenario.kind == SpatialScenario::MaternMixture) return simulate_mixture_image(mask, scenario.base, seed, id);
  const Coords coords = normalize_coords(mask.raw);
  Stream rng(seed, {0x73696du});
  const SpdFactor f = factor_cov(coords, scenario.theta, std::numeric_limits<std::size_t>::max());
  const Eigen::VectorXd w = mvn_sample(f, rng);
  return forward(mask, scenario.base, w, rng, std::move(id));
}

Eigen::MatrixXd mixture_cov(const Coords& s) {
  const MaternParams parts[3] = {{20.0, 0.25, 0.5}, {20.0, 1.0, 1.0}, {20.0, 4.0, 1.5}};
  Eigen::MatrixXd c = cov_matrix(s, parts[0]);
  c += cov_matrix(s, parts[1]);
  c += cov_matrix(s, parts[2]);
  return c / 3.0;
}

VoxelImage simulate_mixture_image(const Mask& mask, const BaseParams& base, std::uint64_t seed, std::string id) {
  const Coords coords = normalize_coords(mask.raw);
  Stream rng(seed, {0x73696du});
  const SpdFactor f = factor_spd(mixture_cov(coords), 20.0);
  const Eigen::VectorXd w = mvn_sample(f, rng);
  return forward(mask, base, w, rng, std::move(id));
}

Dataset simulate_dataset(const SimScenario& scenario, std::size_t count, std::uint64_t seed, const Dataset* mask_source,
                         const std::string& prefix) {
  scenario.validate();
  Dataset out;
  out.feature_names = scenario.base.feature_names;
  const auto masks = make_masks(mask_source, count, mix_seed(seed, {1}), true);
  out.images.resize(count);
  const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%03td", k);
    out.images[static_cast<std::size_t>(k)] = simulate_image(
        masks[static_cast<std::size_t>(k)], scenario, mix_seed(seed, {2, static_cast<std::uint64_t>(k)}), prefix + buf);
  }
  return out;
}

std::vector<ScenarioRow> run_scenario(const SimScenario& scenario, std::size_t reps, const std::vector<NamedSpec>& specs,
                                      const McmcConfig& mcmc, const PredictConfig& predict, std::uint64_t seed,
                                      const Dataset* mask_source) {
  scenario.validate();
  for (const auto& s : specs) s.spec.validate();
  std::vector<ScenarioRow> rows(reps * specs.size());
  const auto n = static_cast<std::ptrdiff_t>(reps);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t rr = 0; rr < n; ++rr) {
    const auto rep = static_cast<std::size_t>(rr);
    const std::uint64_t rep_seed = mix_seed(seed, {static_cast<std::uint64_t>(rep)});
    Dataset all;
    std::string sim_error;
    try {
      all = simulate_dataset(scenario, scenario.n_train + scenario.n_test, rep_seed, mask_source,
                             "r" + std::to_string(rep) + "_");
    } catch (const std::exception& e) {
      sim_error = e.what();
    }
    Dataset train, test;
    train.feature_names = test.feature_names = all.feature_names;
    for (std::size_t k = 0; k < all.images.size(); ++k)
      (k < scenario.n_train ? train : test).images.push_back(all.images[k]);
    for (std::size_t s = 0; s < specs.size(); ++s) {
      ScenarioRow& row = rows[rep * specs.size() + s];
      row.scenario = scenario.name;
      row.spec = specs[s].name;
      row.rep = rep;
      const auto start = std::chrono::steady_clock::now();
      try {
        if (!sim_error.empty()) throw NumericalError("simulation failed: " + sim_error);
        McmcConfig m = mcmc;
        m.seed = mix_seed(rep_seed, {3});
        const ChainSet chains = fit(train, specs[s].spec, m);
        const auto preds = predict_dataset(test, chains, predict);
        std::vector<const VoxelImage*> ptrs;
        for (const auto& im : test.images) ptrs.push_back(&im);
        const ROCSummary r = pooled_roc(preds, ptrs);
        row.auc = r.auc;
        row.s80 = r.s80;
      } catch (const std::exception& e) {
        row.error = e.what();
#pragma omp critical(spvc_log)
        std::cerr << "warning: scenario " << scenario.name << " rep " << rep << " spec " << specs[s].name
                  << " skipped: " << e.what() << '\n';
      }
      row.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  }
  return rows;
}

std::map<std::string, ScenarioSummary> summarize(const std::vector<ScenarioRow>& rows) {
  std::map<std::string, std::vector<const ScenarioRow*>> by;
  for (const auto& r : rows)
    if (r.error.empty()) by[r.spec].push_back(&r);
  std::map<std::string, ScenarioSummary> out;
  for (const auto& [name, list] : by) {
    ScenarioSummary s;
    s.reps = list.size();
    double a = 0, a2 = 0, b = 0, b2 = 0;
    for (const auto* r : list) {
      a += r->auc;
      a2 += r->auc * r->auc;
      b += r->s80;
      b2 += r->s80 * r->s80;
    }
    const auto k = static_cast<double>(list.size());
    s.mean_auc = a / k;
    s.mean_s80 = b / k;
    if (list.size() > 1) {
      s.sd_auc = std::sqrt(std::max(0.0, (a2 - k * s.mean_auc * s.mean_auc) / (k - 1)));
      s.sd_s80 = std::sqrt(std::max(0.0, (b2 - k * s.mean_s80 * s.mean_s80) / (k - 1)));
    }
    out[name] = s;
  }
  return out;
}

void write_scenario_csv(const std::vector<ScenarioRow>& rows, const std::filesystem::path& path,
                        const std::vector<std::string>& header_comments) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& c : header_comments) out << "# " << c << '\n';
  out << "scenario,spec,rep,AUC,S80,runtime_s\n";
  for (const auto& r : rows) {
    if (!r.error.empty()) continue;
    out << r.scenario << ',' << r.spec << ',' << r.rep << ',' << format_double(r.auc) << ',' << format_double(r.s80)
        << ',' << format_double(r.runtime_s) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace spvc
