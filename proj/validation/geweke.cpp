#include "spvc_validation/geweke.hpp"

#include <algorithm>
#include <cmath>

#include "spvc/errors.hpp"
#include "spvc/linalg.hpp"
#include "spvc/rng.hpp"
#include "spvc/sampler.hpp"
#include "spvc_validation/oracles.hpp"

namespace spvc::validation {

namespace {

constexpr std::array<double, 2> kQ0{-0.3, 0.2};

ModelSpec geweke_spec(const GewekeConfig& c) {
  ModelSpec s;
  s.variant = c.variant;
  s.m = c.m;
  s.a = 5;
  auto& h = s.hyper;
  h.mu_prior_var = 1.0;
  h.gamma_df_extra = 4.0;
  h.gamma_scale = 3.0;
  h.sigma_df_extra = 4.0;
  h.sigma_scale = 0.6;
  h.sigma2_min = 0.5;
  h.sigma2_max = 2.0;
  h.phi_min = 0.2;
  h.phi_max = 1.0;
  h.nu_min = 0.5;
  h.nu_max = 2.0;
  s.theta_init = {1.0, std::sqrt(0.2), 1.0};
  return s;
}

struct Geometry {
  std::vector<std::string> ids;
  std::vector<Coords> raw;
  std::vector<std::vector<std::uint8_t>> region;
};

Geometry make_geometry(const GewekeConfig& c) {
  Geometry g;
  for (std::size_t i = 0; i < c.images; ++i) {
    Stream rng(c.seed, {0x67656f6du, i});
    Coords pts;
    std::vector<std::uint8_t> reg;
    for (std::size_t j = 0; j < c.voxels; ++j) {
      pts.push_back({rng.uniform(), rng.uniform()});
      reg.push_back(pts.back().x < 0.5 ? 1 : 0);
    }
    reg[0] = 0;
    reg[1] = 1;
    g.ids.push_back("g" + std::to_string(i));
    g.raw.push_back(pts);
    g.region.push_back(reg);
  }
  return g;
}

struct Params {
  Globals globals;
  std::vector<Eigen::VectorXd> w, eta, delta;
};

struct Data {
  std::vector<Eigen::VectorXd> kappa;
  std::vector<std::vector<std::uint8_t>> labels;
  std::vector<Eigen::MatrixXd> y;
};

double log_uniform(double lo, double hi, Stream& rng) {
  return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * rng.uniform());
}

Params draw_prior(const ModelSpec& spec, const Geometry& geo, const std::vector<Coords>& coords, Eigen::Index d,
                  Stream& rng) {
  const auto& h = spec.hyper;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
  Params p;
  Globals& g = p.globals;
  for (int s = 0; s < 4; ++s) {
    g.mu[s] = std::sqrt(h.mu_prior_var) * standard_normal_vector(d, rng);
    g.gamma[s] = sample_inverse_wishart(static_cast<double>(d) + h.gamma_df_extra, h.gamma_scale * eye, rng);
  }
  const bool sse = has_sse(spec.variant);
  g.sigma = sse ? sample_inverse_wishart(static_cast<double>(d) + h.sigma_df_extra, h.sigma_scale * eye, rng)
                : Eigen::MatrixXd::Zero(d, d);
  g.theta = spec.theta_init;
  const std::size_t dims = theta_dims(spec);
  if (dims >= 1) g.theta.sigma2 = log_uniform(h.sigma2_min, h.sigma2_max, rng);
  if (dims >= 3) {
    g.theta.phi = log_uniform(h.phi_min, h.phi_max, rng);
    g.theta.nu = log_uniform(h.nu_min, h.nu_max, rng);
  }
  g.q0 = kQ0;
  const SpdFactor sf = sse ? factor_spd(g.sigma, 1.0) : SpdFactor{};
  for (std::size_t i = 0; i < geo.ids.size(); ++i) {
    const auto n = static_cast<Eigen::Index>(coords[i].size());
    if (is_spatial(spec.variant)) {
      auto field = make_spatial_field(spec, coords[i], g.theta);
      p.w.push_back(field->sample_prior(rng));
      p.eta.push_back(field->field(p.w.back(), SpatialField::Slot::Current));
    } else {
      p.w.emplace_back();
      p.eta.push_back(Eigen::VectorXd::Zero(n));
    }
    p.delta.push_back(sse ? Eigen::VectorXd(sf.llt.matrixL() * standard_normal_vector(d, rng))
                          : Eigen::VectorXd::Zero(d));
  }
  return p;
}

Data simulate_data(const Globals& g, const std::vector<Eigen::VectorXd>& eta,
                   const std::vector<Eigen::VectorXd>& delta, const Geometry& geo, Eigen::Index d, Stream& rng) {
  Data out;
  std::array<Eigen::MatrixXd, 4> chol;
  for (int s = 0; s < 4; ++s) chol[s] = factor_spd(g.gamma[s], 1.0).matrix_l();
  for (std::size_t i = 0; i < geo.ids.size(); ++i) {
    const std::size_t n = geo.raw[i].size();
    Eigen::VectorXd kappa(static_cast<Eigen::Index>(n));
    std::vector<std::uint8_t> labels(n);
    Eigen::MatrixXd y(static_cast<Eigen::Index>(n), d);
    for (std::size_t j = 0; j < n; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const int r = geo.region[i][j];
      kappa[jj] = g.q0[r] + eta[i][jj] + rng.normal();
      labels[j] = kappa[jj] > 0.0 ? 1 : 0;
      const int s = stratum(labels[j], r);
      y.row(jj) = (g.mu[s] + delta[i] + chol[s] * standard_normal_vector(d, rng)).transpose();
    }
    out.kappa.push_back(kappa);
    out.labels.push_back(labels);
    out.y.push_back(y);
  }
  return out;
}

std::vector<std::string> stat_names(const ModelSpec& spec, std::size_t images, Eigen::Index d) {
  std::vector<std::string> out;
  for (int s = 0; s < 4; ++s)
    for (Eigen::Index k = 0; k < d; ++k) out.push_back("mu[" + std::to_string(s) + "][" + std::to_string(k) + "]");
  for (int s = 0; s < 4; ++s)
    for (Eigen::Index k = 0; k < d; ++k)
      out.push_back("log gamma[" + std::to_string(s) + "](" + std::to_string(k) + "," + std::to_string(k) + ")");
  for (int s = 0; s < 4; ++s) out.push_back("gamma[" + std::to_string(s) + "](0,1)");
  if (has_sse(spec.variant)) {
    for (Eigen::Index k = 0; k < d; ++k) out.push_back("log sigma(" + std::to_string(k) + "," + std::to_string(k) + ")");
    for (std::size_t i = 0; i < images; ++i)
      for (Eigen::Index k = 0; k < d; ++k)
        out.push_back("delta[" + std::to_string(i) + "][" + std::to_string(k) + "]");
  }
  const std::size_t dims = theta_dims(spec);
  if (dims >= 1) out.push_back("log sigma2");
  if (dims >= 3) {
    out.push_back("log phi");
    out.push_back("log nu");
  }
  if (is_spatial(spec.variant))
    for (std::size_t i = 0; i < images; ++i) out.push_back("mean eta[" + std::to_string(i) + "]");
  return out;
}

std::vector<double> stats_of(const ModelSpec& spec, const Globals& g, const std::vector<Eigen::VectorXd>& eta,
                             const std::vector<Eigen::VectorXd>& delta, Eigen::Index d) {
  std::vector<double> out;
  for (int s = 0; s < 4; ++s)
    for (Eigen::Index k = 0; k < d; ++k) out.push_back(g.mu[s][k]);
  for (int s = 0; s < 4; ++s)
    for (Eigen::Index k = 0; k < d; ++k) out.push_back(std::log(g.gamma[s](k, k)));
  for (int s = 0; s < 4; ++s) out.push_back(d > 1 ? g.gamma[s](0, 1) : 0.0);
  if (has_sse(spec.variant)) {
    for (Eigen::Index k = 0; k < d; ++k) out.push_back(std::log(g.sigma(k, k)));
    for (const auto& v : delta)
      for (Eigen::Index k = 0; k < d; ++k) out.push_back(v[k]);
  }
  const std::size_t dims = theta_dims(spec);
  if (dims >= 1) out.push_back(std::log(g.theta.sigma2));
  if (dims >= 3) {
    out.push_back(std::log(g.theta.phi));
    out.push_back(std::log(g.theta.nu));
  }
  if (is_spatial(spec.variant))
    for (const auto& e : eta) out.push_back(e.mean());
  return out;
}

Dataset to_dataset(const Geometry& geo, const Data& data, Eigen::Index d) {
  Dataset ds;
  for (Eigen::Index k = 0; k < d; ++k) ds.feature_names.push_back("f" + std::to_string(k));
  for (std::size_t i = 0; i < geo.ids.size(); ++i)
    ds.images.push_back(make_image(geo.ids[i], geo.raw[i], geo.region[i], data.y[i], data.labels[i]));
  return ds;
}

bool both_classes_per_region(const Geometry& geo, const Data& data) {
  std::array<std::array<int, 2>, 2> seen{};
  for (std::size_t i = 0; i < geo.ids.size(); ++i)
    for (std::size_t j = 0; j < data.labels[i].size(); ++j) seen[geo.region[i][j]][data.labels[i][j]] = 1;
  return seen[0][0] && seen[0][1] && seen[1][0] && seen[1][1];
}

}  // namespace

GewekeResult geweke_test(const GewekeConfig& config) {
  if (config.images < 1 || config.voxels < 4 || config.dim < 1 || config.thin < 1)
    throw ConfigError("geweke test needs images >= 1, voxels >= 4, dim >= 1 and thin >= 1");
  const ModelSpec spec = geweke_spec(config);
  spec.validate();
  const Geometry geo = make_geometry(config);
  const Eigen::Index d = config.dim;
  std::vector<Coords> coords;
  for (const auto& r : geo.raw) coords.push_back(normalize_coords(r));

  const auto names = stat_names(spec, config.images, d);
  std::vector<std::vector<double>> forward(names.size()), chain(names.size());

  // marginal-conditional draws: parameters straight from the prior
  for (std::size_t t = 0; t < config.forward_draws; ++t) {
    Stream rng(config.seed, {0x666f7277u, t});
    const Params p = draw_prior(spec, geo, coords, d, rng);
    const auto v = stats_of(spec, p.globals, p.eta, p.delta, d);
    for (std::size_t k = 0; k < v.size(); ++k) forward[k].push_back(v[k]);
  }

  // successive-conditional chain, started from a prior draw
  Params start;
  Data data;
  for (std::uint64_t attempt = 0;; ++attempt) {
    Stream rng(config.seed, {0x73746172u, attempt});
    start = draw_prior(spec, geo, coords, d, rng);
    data = simulate_data(start.globals, start.eta, start.delta, geo, d, rng);
    if (both_classes_per_region(geo, data)) break;
    if (attempt > 1000) throw NumericalError("geweke test could not draw a usable starting data set");
  }
  Sampler sampler(to_dataset(geo, data, d), spec, config.seed, 0);
  sampler.globals() = start.globals;
  for (std::size_t i = 0; i < config.images; ++i) {
    ImageState& im = sampler.images()[i];
    if (is_spatial(spec.variant)) im.w = start.w[i];
    im.delta = start.delta[i];
    im.kappa = data.kappa[i];
  }
  sampler.refresh_fields();

  std::vector<Eigen::VectorXd> eta(config.images), delta(config.images);
  const std::size_t total = config.burnin + config.iters;
  for (std::size_t t = 0; t < total; ++t) {
    sampler.step();
    if (t + 1 == config.burnin) sampler.freeze_adaptation();
    const Globals& g = sampler.globals();
    for (std::size_t i = 0; i < config.images; ++i) {
      const ImageState& im = sampler.images()[i];
      eta[i] = is_spatial(spec.variant) ? im.eta : Eigen::VectorXd::Zero(im.kappa.size());
      delta[i] = im.delta;
    }
    Stream rng(config.seed, {0x72657369u, t});
    const Data next = simulate_data(g, eta, delta, geo, d, rng);
    for (std::size_t i = 0; i < config.images; ++i) {
      sampler.set_image_data(i, next.labels[i], next.y[i]);
      sampler.images()[i].kappa = next.kappa[i];
    }
    if (t < config.burnin || (t - config.burnin) % config.thin != 0) continue;
    const auto v = stats_of(spec, g, eta, delta, d);
    for (std::size_t k = 0; k < v.size(); ++k) chain[k].push_back(v[k]);
  }

  GewekeResult out;
  out.chain_samples = chain.empty() ? 0 : chain.front().size();
  for (std::size_t k = 0; k < names.size(); ++k) {
    const auto ks = oracle::ks_two_sample(forward[k], chain[k]);
    out.stats.push_back({names[k], ks.statistic, ks.p_value});
    out.min_p = std::min(out.min_p, ks.p_value);
  }
  out.corrected_p = std::min(1.0, out.min_p * static_cast<double>(names.size()));
  return out;
}

}  // namespace spvc::validation
