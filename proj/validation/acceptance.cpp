#include "spvc_validation/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "spvc/car.hpp"
#include "spvc/covariance.hpp"
#include "spvc/full_gp.hpp"
#include "spvc/metrics.hpp"
#include "spvc/nngp.hpp"
#include "spvc/predict.hpp"
#include "spvc/reduced_rank.hpp"
#include "spvc/sampler.hpp"
#include "spvc/simulate.hpp"
#include "spvc_validation/geweke.hpp"
#include "spvc_validation/oracles.hpp"

namespace spvc::validation {

namespace {

using Log = std::function<void(const std::string&)>;

std::string fmt(const char* pattern, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, a);
  return buf;
}

struct Rng {
  explicit Rng(std::uint64_t seed) : eng(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  std::size_t integer(std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(eng); }
  Coords points(std::size_t n) {
    Coords out;
    for (std::size_t i = 0; i < n; ++i) out.push_back({uniform(-1.0, 1.0), uniform(-1.0, 1.0)});
    return out;
  }
  std::mt19937_64 eng;
};

// 1. closed forms at nu = 0.5 and 1.5, and the Bessel definition in general
CriterionResult kernel(const AcceptanceConfig& c) {
  Rng rng(c.seed);
  double err_closed = 0.0, err_bessel = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const double d = 2.0 - rng.uniform(0.0, 2.0);  // (0, 2]
    const double phi = rng.log_uniform(0.01, 10.0);
    err_closed = std::max({err_closed, std::abs(matern_corr(d, phi, 0.5) - oracle::matern_half(d, phi)),
                           std::abs(matern_corr(d, phi, 1.5) - oracle::matern_three_halves(d, phi))});
    if (t % 10 != 0) continue;  // the quadrature is slow; general nu on every tenth pair
    const double nu = rng.uniform(0.3, 3.0);
    err_bessel = std::max(err_bessel, std::abs(matern_corr(d, phi, nu) - oracle::matern_corr_quadrature(d, phi, nu)));
  }
  CriterionResult r;
  r.pass = err_closed <= 1e-10 && err_bessel <= 1e-10;
  r.detail = "max error vs closed forms " + fmt("%.2e", err_closed) + ", vs quadrature Bessel definition " +
             fmt("%.2e", err_bessel) + " (1000 pairs, 100 with general nu)";
  return r;
}

// 2. NNGP with all earlier neighbors is the dense GP
CriterionResult nngp_exact(const AcceptanceConfig& c) {
  Rng rng(c.seed + 2);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = rng.integer(10, 200);
    const Coords s = rng.points(n);
    const MaternParams theta{rng.log_uniform(0.5, 5.0), rng.log_uniform(0.1, 0.8), rng.uniform(0.5, 1.5)};
    const auto graph = std::make_shared<const NeighborGraph>(make_neighbor_graph(s, n - 1));
    const auto f = nngp_factors(graph, s, theta);
    const Eigen::VectorXd w = gp_sample(s, theta, c.seed + static_cast<std::uint64_t>(t));
    worst = std::max(worst, std::abs(nngp_logdensity(w, f) - gp_logdensity(w, s, theta)));
  }
  CriterionResult r;
  r.pass = worst <= 1e-8;
  r.detail = "max |nngp_logdensity - gp_logdensity| = " + fmt("%.2e", worst) + " over 20 instances, m = n - 1";
  return r;
}

// 3. off-diagonal nonzeros of the NNGP precision
CriterionResult nngp_sparsity(const AcceptanceConfig& c) {
  Rng rng(c.seed + 3);
  const std::size_t n = 500;
  const Coords s = rng.points(n);
  const MaternParams theta{1.0, 0.3, 1.0};
  bool ok = true;
  std::ostringstream out;
  for (std::size_t m : {5, 10, 15}) {
    const auto graph = std::make_shared<const NeighborGraph>(make_neighbor_graph(s, m));
    const std::size_t nnz = offdiag_nonzeros(nngp_precision(nngp_factors(graph, s, theta)));
    const std::size_t bound = m * (m + 1) * n / 2;
    ok = ok && nnz <= bound;
    out << "m=" << m << ": " << nnz << " <= " << bound << (nnz <= bound ? "" : " VIOLATED") << "; ";
  }
  CriterionResult r;
  r.pass = ok;
  r.detail = out.str() + "n = 500";
  return r;
}

// 4. predictive-process covariance is dominated by the full covariance
CriterionResult rr_domination(const AcceptanceConfig& c) {
  Rng rng(c.seed + 4);
  double worst_eig = INFINITY, worst_knot = 0.0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t a = std::vector<std::size_t>{5, 10, 25}[static_cast<std::size_t>(t) % 3];
    const std::size_t n = rng.integer(std::max<std::size_t>(a, 30), 200);
    const Coords s = rng.points(n);
    const MaternParams theta{rng.log_uniform(0.5, 5.0), rng.log_uniform(0.1, 0.8), rng.uniform(0.5, 1.5)};
    const auto knots = make_knot_set(s, select_knots(s, a), theta);
    const Eigen::MatrixXd full = cov_matrix(s, theta);
    const Eigen::MatrixXd low = rr_cov(s, knots, theta);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(full - low, Eigen::EigenvaluesOnly);
    worst_eig = std::min(worst_eig, es.eigenvalues().minCoeff() / theta.sigma2);
    for (auto i : knots.index)
      for (auto j : knots.index) worst_knot = std::max(worst_knot, std::abs(low(i, j) - full(i, j)));
  }
  const Coords s = rng.points(60);
  const MaternParams theta{2.0, 0.3, 0.5};
  const auto knots = make_knot_set(s, select_knots(s, 60), theta);
  const double sat = (rr_cov(s, knots, theta) - cov_matrix(s, theta)).cwiseAbs().maxCoeff();
  CriterionResult r;
  r.pass = worst_eig >= -1e-8 && worst_knot <= 1e-10 && sat <= 1e-8;
  r.detail = "min eig(C - C_rr)/sigma2 = " + fmt("%.2e", worst_eig) + ", knot mismatch " + fmt("%.2e", worst_knot) +
             ", a = n gap " + fmt("%.2e", sat);
  return r;
}

// 5. proper CAR precision
CriterionResult car_validity(const AcceptanceConfig& c) {
  Rng rng(c.seed + 5);
  bool spd = true;
  double asym = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Coords s = rng.points(rng.integer(5, 120));
    const auto wts = car_weights(s);
    for (double alpha : {0.5, 0.9, 0.99}) {
      const Eigen::MatrixXd p = Eigen::MatrixXd(car_precision(wts, rng.log_uniform(0.2, 5.0), alpha).precision());
      asym = std::max(asym, (p - p.transpose()).cwiseAbs().maxCoeff());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p, Eigen::EigenvaluesOnly);
      spd = spd && es.eigenvalues().minCoeff() > 0.0 && Eigen::LLT<Eigen::MatrixXd>(p).info() == Eigen::Success;
    }
  }
  double moment_err = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Coords s = rng.points(4);
    const auto wts = car_weights(s);
    const double alpha = rng.uniform(0.1, 0.99), sigma2 = rng.log_uniform(0.2, 5.0);
    const auto prec = car_precision(wts, sigma2, alpha);
    const Eigen::MatrixXd cov = Eigen::MatrixXd(prec.precision()).inverse();
    const Eigen::MatrixXd w = Eigen::MatrixXd(wts.w);
    Eigen::Vector4d x(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    for (int j = 0; j < 4; ++j) {
      Eigen::Matrix3d rest;
      Eigen::Vector3d cross, xr;
      for (int a = 0, ia = 0; a < 4; ++a) {
        if (a == j) continue;
        cross[ia] = cov(j, a);
        xr[ia] = x[a];
        for (int b = 0, ib = 0; b < 4; ++b)
          if (b != j) rest(ia, ib++) = cov(a, b);
        ++ia;
      }
      const Eigen::Vector3d g = rest.ldlt().solve(cross);
      double mean_cond = 0.0;
      for (int k = 0; k < 4; ++k) mean_cond += alpha * w(j, k) * x[k] / wts.d[j];
      moment_err = std::max({moment_err, std::abs(g.dot(xr) - mean_cond),
                             std::abs(cov(j, j) - cross.dot(g) - sigma2 / wts.d[j])});
    }
  }
  CriterionResult r;
  r.pass = spd && asym == 0.0 && moment_err <= 1e-10;
  r.detail = std::string(spd ? "SPD" : "NOT SPD") + " on 20 x 3 instances, asymmetry " + fmt("%.1e", asym) +
             ", conditional-moment error " + fmt("%.2e", moment_err) + " on n = 4";
  return r;
}

// 6. prediction against closed form (Base) and enumeration (FullGP)
CriterionResult sampler_oracle(const AcceptanceConfig& c, const Log& log) {
  Rng rng(c.seed + 6);
  const Coords raw{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  const std::vector<std::uint8_t> region{0, 1, 0, 1};
  auto random_globals = [&]() {
    Globals g;
    for (int s = 0; s < 4; ++s) {
      g.mu[s] = Eigen::Vector2d(rng.uniform(-1, 1), rng.uniform(-1, 1));
      Eigen::Matrix2d a;
      a << rng.uniform(0.5, 1.5), rng.uniform(-0.4, 0.4), 0.0, rng.uniform(0.5, 1.5);
      g.gamma[s] = a.transpose() * a;
    }
    g.sigma = Eigen::Matrix2d::Zero();
    g.q0 = {rng.uniform(-1.2, 0.2), rng.uniform(-0.8, 0.5)};
    return g;
  };
  auto random_features = [&]() {
    Eigen::MatrixXd y(4, 2);
    for (int j = 0; j < 4; ++j) y.row(j) = Eigen::RowVector2d(rng.uniform(-2, 2), rng.uniform(-2, 2));
    return y;
  };
  auto log_f = [](const VoxelImage& im, const Globals& g, int cls) {
    std::vector<double> out;
    for (std::size_t j = 0; j < im.size(); ++j) {
      const int s = stratum(cls, im.region[j]);
      out.push_back(oracle::gaussian_logpdf_observed(im.features.row(static_cast<Eigen::Index>(j)).transpose(),
                                                     g.mu[s], g.gamma[s]));
    }
    return out;
  };

  double base_err = 0.0;
  for (int t = 0; t < 10; ++t) {
    const Globals g = random_globals();
    const VoxelImage im = make_image("b" + std::to_string(t), raw, region, random_features());
    ModelSpec spec;
    const auto pred = predict_image(im, fixed_chainset(spec, g, {"a", "b"}, 2));
    const auto f1 = log_f(im, g, 1), f0 = log_f(im, g, 0);
    for (std::size_t j = 0; j < 4; ++j)
      base_err = std::max(base_err, std::abs(pred.prob[j] - oracle::bayes_rule(oracle::norm_cdf(g.q0[region[j]]),
                                                                               f1[j], f0[j])));
  }

  double gp_err = 0.0;
  for (int t = 0; t < 10; ++t) {
    Globals g = random_globals();
    g.theta = {rng.log_uniform(0.5, 4.0), rng.log_uniform(0.3, 2.0), t % 2 == 0 ? 0.5 : 1.5};
    const VoxelImage im = make_image("g" + std::to_string(t), raw, region, random_features());
    ModelSpec spec;
    spec.variant = Variant::FullGP;
    PredictConfig pc;
    pc.seed = c.seed + static_cast<std::uint64_t>(t);
    const auto pred = predict_image(im, fixed_chainset(spec, g, {"a", "b"}, 4000), pc);
    std::vector<double> q0;
    for (auto r : region) q0.push_back(g.q0[r]);
    const auto truth = oracle::enumerate_label_posterior(log_f(im, g, 1), log_f(im, g, 0), q0,
                                                         oracle::dense_cov(im.coords, g.theta.sigma2, g.theta.phi,
                                                                           g.theta.nu),
                                                         1000000, c.seed + 60 + static_cast<std::uint64_t>(t));
    for (std::size_t j = 0; j < 4; ++j) gp_err = std::max(gp_err, std::abs(pred.prob[j] - truth[j]));
    if (log) log("  FullGP instance " + std::to_string(t) + ": max error so far " + fmt("%.4f", gp_err));
  }
  CriterionResult r;
  r.pass = base_err <= 1e-6 && gp_err <= 0.02;
  r.detail = "Base max error " + fmt("%.2e", base_err) + " (10 instances); FullGP max error " + fmt("%.4f", gp_err) +
             " vs enumeration with 1e6 draws (10 instances)";
  return r;
}

// 7. coverage of (log sigma2, log phi) by 90% intervals
CriterionResult recovery(const AcceptanceConfig& c, const Log& log) {
  SimScenario sc;
  sc.name = "recovery";
  sc.theta = {5.0, 0.5, 1.5};
  ModelSpec spec;
  spec.variant = Variant::NNGP_SSE;
  McmcConfig mc;
  mc.chains = c.recovery_chains;
  mc.iters = c.recovery_iters;
  mc.burnin = c.recovery_burnin;
  std::size_t both = 0, cover_s = 0, cover_p = 0;
  auto quantile = [](std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  for (std::size_t rep = 0; rep < c.reps; ++rep) {
    const Dataset data = simulate_dataset(sc, 10, mix_seed(c.seed, {7, rep}), nullptr, "rec");
    mc.seed = mix_seed(c.seed, {70, rep});
    const ChainSet cs = fit(data, spec, mc);
    std::vector<double> ls, lp;
    for (const auto& ch : cs.chains)
      for (const auto& d : ch.draws) {
        ls.push_back(std::log(d.globals.theta.sigma2));
        lp.push_back(std::log(d.globals.theta.phi));
      }
    const bool s_ok = quantile(ls, 0.05) <= std::log(5.0) && std::log(5.0) <= quantile(ls, 0.95);
    const bool p_ok = quantile(lp, 0.05) <= std::log(0.5) && std::log(0.5) <= quantile(lp, 0.95);
    cover_s += s_ok;
    cover_p += p_ok;
    both += s_ok && p_ok;
    if (log) {
      const auto rh = cs.split_rhat();
      std::ostringstream line;
      line.precision(3);
      line << "  rep " << rep << ": sigma2 90% [" << std::exp(quantile(ls, 0.05)) << ", "
           << std::exp(quantile(ls, 0.95)) << "], phi 90% [" << std::exp(quantile(lp, 0.05)) << ", "
           << std::exp(quantile(lp, 0.95)) << "], R-hat " << rh.at("sigma2") << "/" << rh.at("phi") << "/" << rh.at("nu")
           << (s_ok && p_ok ? " covered" : " missed");
      log(line.str());
    }
  }
  CriterionResult r;
  r.pass = c.reps >= 10 && both >= 8 * c.reps / 10;
  std::ostringstream out;
  out << "both covered in " << both << "/" << c.reps << " (sigma2 " << cover_s << ", phi " << cover_p << "); "
      << mc.chains << " chains x " << mc.iters << " + " << mc.burnin << " burn-in";
  r.detail = out.str();
  return r;
}

std::map<std::string, ScenarioSummary> scenario_means(const AcceptanceConfig& c, const SimScenario& sc,
                                                      const std::vector<std::string>& variants, std::uint64_t seed,
                                                      std::size_t& failures) {
  std::vector<NamedSpec> specs;
  for (const auto& v : variants) {
    ModelSpec s;
    s.variant = *parse_variant(v);
    specs.push_back({v, s});
  }
  McmcConfig mc;
  mc.chains = c.scenario_chains;
  mc.iters = c.scenario_iters;
  mc.burnin = c.scenario_burnin;
  PredictConfig pc;
  pc.max_draws = c.predict_max_draws;
  const auto rows = run_scenario(sc, c.reps, specs, mc, pc, seed);
  failures = 0;
  for (const auto& row : rows) failures += !row.error.empty();
  return summarize(rows);
}

std::string means_text(const std::map<std::string, ScenarioSummary>& m, const std::vector<std::string>& order) {
  std::ostringstream out;
  out.precision(4);
  for (const auto& v : order) {
    const auto it = m.find(v);
    out << v << " " << (it == m.end() ? std::nan("") : it->second.mean_auc) << "; ";
  }
  return out.str();
}

// 8. ordering NNGP+SSE > SSE > Base under a strong field
CriterionResult ordering(const AcceptanceConfig& c) {
  SimScenario sc;
  sc.name = "s20-phi0.5";
  sc.theta = {20.0, 0.5, 1.5};
  std::size_t failures = 0;
  const std::vector<std::string> v{"NNGP+SSE", "SSE", "Base"};
  const auto m = scenario_means(c, sc, v, mix_seed(c.seed, {8}), failures);
  const double nngp = m.at("NNGP+SSE").mean_auc, sse = m.at("SSE").mean_auc, base = m.at("Base").mean_auc;
  CriterionResult r;
  r.pass = failures == 0 && c.reps >= 10 && nngp > sse && sse > base && nngp - base >= 0.05;
  r.detail = "mean AUC " + means_text(m, v) + "gap " + fmt("%.4f", nngp - base) + ", failed fits " +
             std::to_string(failures);
  return r;
}

// 9. reduced rank below NNGP under short-range correlation
CriterionResult rr_failure(const AcceptanceConfig& c) {
  SimScenario sc;
  sc.name = "s1-phi0.1";
  sc.theta = {1.0, 0.1, 1.5};
  std::size_t failures = 0;
  const std::vector<std::string> v{"RR+SSE", "NNGP+SSE"};
  const auto m = scenario_means(c, sc, v, mix_seed(c.seed, {9}), failures);
  CriterionResult r;
  r.pass = failures == 0 && c.reps >= 10 && m.at("RR+SSE").mean_auc < m.at("NNGP+SSE").mean_auc;
  r.detail = "mean AUC " + means_text(m, v) + "a = 10 knots, sigma2 = 1, failed fits " + std::to_string(failures);
  return r;
}

// 10. AUC against pair counting; S80 against hand-computed curves
CriterionResult metric_oracle(const AcceptanceConfig& c) {
  Rng rng(c.seed + 10);
  double auc_err = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = rng.integer(2, 400);
    std::vector<double> s(n);
    std::vector<std::uint8_t> l(n);
    for (std::size_t j = 0; j < n; ++j) {
      l[j] = rng.uniform(0, 1) < 0.3 ? 1 : 0;
      s[j] = std::round(rng.uniform(0, 8) + 2.0 * l[j]) / 4.0;  // coarse grid: many ties
    }
    l[0] = 0;
    l[1] = 1;
    auc_err = std::max(auc_err, std::abs(roc(s, l).auc - oracle::auc_pair_count(s, l)));
  }
  // Two constructed cases: a vertical step exactly at fpr 0.2 (top counts:
  // 0.75), and a tie making a diagonal from (0, 0.5) to (1/3, 1): 0.5 + 0.5 * 0.6
  const double a = roc({0.1, 0.2, 0.3, 0.4, 0.5, 0.35, 0.45, 0.6, 0.7}, {0, 0, 0, 0, 0, 1, 1, 1, 1}).s80;
  const double b = roc({0.1, 0.2, 0.5, 0.5, 0.6}, {0, 0, 0, 1, 1}).s80;
  const double s80_err = std::max(std::abs(a - 0.75), std::abs(b - 0.8));
  CriterionResult r;
  r.pass = auc_err == 0.0 && s80_err <= 1e-12;
  r.detail = "max |AUC - pair count| = " + fmt("%.1e", auc_err) + " over 100 instances; S80 error " +
             fmt("%.1e", s80_err);
  return r;
}

// 11. forward versus successive-conditional simulation
CriterionResult geweke(const AcceptanceConfig& c, const Log& log) {
  GewekeConfig g;
  g.seed = c.seed + 11;
  g.iters = c.geweke_iters;
  g.thin = c.geweke_thin;
  g.forward_draws = c.geweke_forward;
  const GewekeResult res = geweke_test(g);
  std::string worst;
  double worst_p = 2.0;
  for (const auto& s : res.stats) {
    if (log) log("  " + s.name + ": D = " + fmt("%.4f", s.statistic) + ", p = " + fmt("%.4f", s.p_value));
    if (s.p_value < worst_p) {
      worst_p = s.p_value;
      worst = s.name;
    }
  }
  CriterionResult r;
  r.pass = res.corrected_p > 0.01;
  r.detail = std::to_string(res.stats.size()) + " statistics, " + std::to_string(res.chain_samples) +
             " chain samples; smallest p = " + fmt("%.4f", res.min_p) + " (" + worst + "), Bonferroni " +
             fmt("%.4f", res.corrected_p);
  return r;
}

const std::map<int, std::pair<std::string, double>>& table() {
  static const std::map<int, std::pair<std::string, double>> t{
      {1, {"kernel-correctness", 1.0}},     {2, {"nngp-exactness", 30.0}},
      {3, {"nngp-sparsity", 10.0}},         {4, {"reduced-rank-domination", 60.0}},
      {5, {"car-validity", 10.0}},          {6, {"prediction-oracles", 600.0}},
      {7, {"parameter-recovery", 7200.0}},  {8, {"variant-ordering", 21600.0}},
      {9, {"reduced-rank-short-range", 21600.0}}, {10, {"metric-correctness", 5.0}},
      {11, {"sampler-self-consistency", 1800.0}}};
  return t;
}

}  // namespace

std::vector<int> criterion_ids() { return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}; }

std::string criterion_name(int id) { return table().at(id).first; }

CriterionResult run_criterion(int id, const AcceptanceConfig& config, const Log& log) {
  const auto start = std::chrono::steady_clock::now();
  CriterionResult r;
  try {
    switch (id) {
      case 1: r = kernel(config); break;
      case 2: r = nngp_exact(config); break;
      case 3: r = nngp_sparsity(config); break;
      case 4: r = rr_domination(config); break;
      case 5: r = car_validity(config); break;
      case 6: r = sampler_oracle(config, log); break;
      case 7: r = recovery(config, log); break;
      case 8: r = ordering(config); break;
      case 9: r = rr_failure(config); break;
      case 10: r = metric_oracle(config); break;
      case 11: r = geweke(config, log); break;
      default: throw std::out_of_range("unknown criterion " + std::to_string(id));
    }
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("error: ") + e.what();
  }
  r.id = id;
  r.name = criterion_name(id);
  r.budget_seconds = table().at(id).second;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (r.seconds > r.budget_seconds) {
    r.pass = false;
    r.detail += "; over the runtime budget of " + fmt("%.0f", r.budget_seconds) + " s";
  }
  return r;
}

std::string format_result(const CriterionResult& r) {
  std::ostringstream out;
  out << (r.pass ? "[PASS] " : "[FAIL] ") << r.id << " " << r.name << " (" << fmt("%.1f", r.seconds) << " s): "
      << r.detail;
  return out.str();
}

}  // namespace spvc::validation
