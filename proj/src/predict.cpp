#include "spvc/predict.hpp"

#include <cmath>
#include <memory>

#include "spvc/errors.hpp"
#include "spvc/linalg.hpp"
#include "spvc/nngp.hpp"
#include "spvc/rng.hpp"
#include "spvc/spatial_field.hpp"

namespace spvc {

namespace {

double log_norm_cdf(double x) {
  const double p = 0.5 * std::erfc(-x / std::sqrt(2.0));
  return std::log(std::max(p, 1e-300));
}

// Per-draw quantities of one stratum's feature distribution.
struct StratumModel {
  Eigen::VectorXd mu;
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::MatrixXd inverse;
  double log_det = 0.0;
};

// Test image in coordinate order.
struct OrderedImage {
  std::vector<std::size_t> perm;  // ordered position -> original index
  Coords coords;
  std::vector<std::uint8_t> region;
  Eigen::MatrixXd y;
  std::vector<char> complete;
  std::vector<std::vector<Eigen::Index>> observed;  // observed features of incomplete voxels
};

OrderedImage order_image(const VoxelImage& im) {
  OrderedImage out;
  out.perm = order_voxels(im.coords);
  const auto n = static_cast<Eigen::Index>(im.size());
  out.y.resize(n, im.dim());
  out.complete.resize(im.size());
  out.observed.resize(im.size());
  for (std::size_t k = 0; k < im.size(); ++k) {
    const std::size_t v = out.perm[k];
    out.coords.push_back(im.coords[v]);
    out.region.push_back(im.region[v]);
    out.y.row(static_cast<Eigen::Index>(k)) = im.features.row(static_cast<Eigen::Index>(v));
    out.complete[k] = im.complete(v) ? 1 : 0;
    if (!out.complete[k])
      for (Eigen::Index f = 0; f < im.dim(); ++f)
        if (!im.missing(v, f)) out.observed[k].push_back(f);
  }
  return out;
}

class FeatureModel {
 public:
  FeatureModel(const Globals& g, Eigen::Index d) : gamma_(g.gamma) {
    for (int s = 0; s < 4; ++s) {
      StratumModel& m = strata_[s];
      m.mu = g.mu[s];
      const SpdFactor f = factor_spd(g.gamma[s], g.gamma[s].diagonal().maxCoeff());
      m.llt = f.llt;
      m.log_det = f.log_det();
      m.inverse = f.inverse();
    }
    d_ = d;
  }

  // log N(y | mu_s + delta, Gamma_s) over observed entries.
  double log_density(const OrderedImage& im, std::size_t k, int s, const Eigen::VectorXd& delta) const {
    const StratumModel& m = strata_[s];
    const auto row = static_cast<Eigen::Index>(k);
    if (im.complete[k]) {
      const Eigen::VectorXd r = im.y.row(row).transpose() - m.mu - delta;
      const Eigen::VectorXd z = m.llt.matrixL().solve(r);
      return -0.5 * (static_cast<double>(d_) * kLog2Pi + m.log_det + z.squaredNorm());
    }
    const auto& obs = im.observed[k];
    if (obs.empty()) return 0.0;
    const auto q = static_cast<Eigen::Index>(obs.size());
    Eigen::VectorXd r(q);
    Eigen::MatrixXd sub(q, q);
    for (Eigen::Index a = 0; a < q; ++a) {
      r[a] = im.y(row, obs[a]) - m.mu[obs[a]] - delta[obs[a]];
      for (Eigen::Index b = 0; b < q; ++b) sub(a, b) = gamma_[s](obs[a], obs[b]);
    }
    const SpdFactor f = factor_spd(sub, sub.diagonal().maxCoeff());
    return mvn_logdensity(r, f);
  }

  const StratumModel& stratum(int s) const { return strata_[s]; }

 private:
  std::array<Eigen::MatrixXd, 4> gamma_;
  std::array<StratumModel, 4> strata_;
  Eigen::Index d_ = 0;
};

// P(c = 1 | eta, delta, y) for every voxel.
void label_probs(const OrderedImage& im, const FeatureModel& fm, const Globals& g, const Eigen::VectorXd& eta,
                 const Eigen::VectorXd& delta, std::vector<double>& out) {
  for (std::size_t k = 0; k < im.coords.size(); ++k) {
    const int r = im.region[k];
    const double a = g.q0[r] + (eta.size() ? eta[static_cast<Eigen::Index>(k)] : 0.0);
    const double l1 = log_norm_cdf(a) + fm.log_density(im, k, stratum(1, r), delta);
    const double l0 = log_norm_cdf(-a) + fm.log_density(im, k, stratum(0, r), delta);
    out[k] = 1.0 / (1.0 + std::exp(l0 - l1));
  }
}

// delta | c, y under N(0, Sigma) and complete voxels.
Eigen::VectorXd sample_delta(const OrderedImage& im, const FeatureModel& fm, const Eigen::MatrixXd& sigma_inv,
                             const std::vector<std::uint8_t>& c, Stream& rng) {
  const Eigen::Index d = sigma_inv.rows();
  std::array<double, 4> count{0, 0, 0, 0};
  std::array<Eigen::VectorXd, 4> sum;
  for (auto& s : sum) s = Eigen::VectorXd::Zero(d);
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (!im.complete[k]) continue;
    const int s = stratum(c[k], im.region[k]);
    count[s] += 1;
    sum[s] += im.y.row(static_cast<Eigen::Index>(k)).transpose();
  }
  Eigen::MatrixXd prec = sigma_inv;
  Eigen::VectorXd lin = Eigen::VectorXd::Zero(d);
  for (int s = 0; s < 4; ++s) {
    if (count[s] == 0) continue;
    const StratumModel& m = fm.stratum(s);
    prec += count[s] * m.inverse;
    lin += m.inverse * (sum[s] - count[s] * m.mu);
  }
  const SpdFactor f = factor_spd(prec, prec.diagonal().maxCoeff());
  return f.solve(lin) + f.llt.matrixU().solve(standard_normal_vector(d, rng));
}

}  // namespace

void PredictConfig::validate() const {
  if (inner_sweeps < 1 || inner_burn >= inner_sweeps)
    throw ConfigError("prediction needs inner_sweeps >= 1 and inner_burn < inner_sweeps");
}

PredictionResult predict_image(const VoxelImage& test, const ChainSet& chains, const PredictConfig& config) {
  config.validate();
  chains.validate();
  const ModelSpec& spec = chains.spec;
  const Eigen::Index d = chains.dim();
  if (test.dim() != d) throw InputError("image " + test.id + " has the wrong feature dimension");
  if (test.size() == 0) throw InputError("image " + test.id + " is empty");

  const OrderedImage im = order_image(test);
  const std::size_t n = im.coords.size();
  const bool spatial = is_spatial(spec.variant);
  const bool sse = has_sse(spec.variant);

  const std::size_t total = chains.total_draws();
  std::vector<std::size_t> use;
  if (config.max_draws == 0 || config.max_draws >= total) {
    for (std::size_t t = 0; t < total; ++t) use.push_back(t);
  } else {
    for (std::size_t k = 0; k < config.max_draws; ++k) use.push_back(k * total / config.max_draws);
  }

  std::unique_ptr<SpatialField> field;
  Eigen::VectorXd w, eta;
  MaternParams field_theta;
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(d);
  std::vector<std::uint8_t> c(n, 0);
  std::vector<double> p(n), acc(n, 0.0);
  Eigen::VectorXd kappa(static_cast<Eigen::Index>(n)), resid(static_cast<Eigen::Index>(n));
  const std::uint64_t key = fnv1a(test.id);
  double contributions = 0.0;

  for (std::size_t u = 0; u < use.size(); ++u) {
    const Globals& g = chains.draw(use[u]).globals;
    const FeatureModel fm(g, d);
    if (spatial) {
      if (!field) {
        field = make_spatial_field(spec, im.coords, g.theta);
        w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(field->state_size()));
        eta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        field_theta = g.theta;
      } else if (!(g.theta == field_theta)) {
        field->reset(g.theta);
        field_theta = g.theta;
        eta = field->field(w, SpatialField::Slot::Current);
      }
    }
    if (!spatial && !sse) {
      label_probs(im, fm, g, Eigen::VectorXd(), delta, p);
      for (std::size_t k = 0; k < n; ++k) acc[k] += p[k];
      contributions += 1.0;
      continue;
    }
    Eigen::MatrixXd sigma_inv;
    if (sse) sigma_inv = factor_spd(g.sigma, g.sigma.diagonal().maxCoeff()).inverse();
    for (std::size_t sweep = 0; sweep < config.inner_sweeps; ++sweep) {
      Stream rng(config.seed, {key, static_cast<std::uint64_t>(use[u]), static_cast<std::uint64_t>(sweep)});
      label_probs(im, fm, g, eta, delta, p);
      if (sweep >= config.inner_burn) {
        for (std::size_t k = 0; k < n; ++k) acc[k] += p[k];
        contributions += 1.0;
      }
      for (std::size_t k = 0; k < n; ++k) c[k] = rng.uniform() < p[k] ? 1 : 0;
      if (spatial) {
        for (std::size_t k = 0; k < n; ++k) {
          const auto j = static_cast<Eigen::Index>(k);
          const double q = g.q0[im.region[k]];
          kappa[j] = sample_probit_latent(q + eta[j], c[k] != 0, rng);
          resid[j] = kappa[j] - q;
        }
        field->gibbs(w, resid, rng);
        eta = field->field(w, SpatialField::Slot::Current);
      }
      if (sse) delta = sample_delta(im, fm, sigma_inv, c, rng);
    }
  }

  PredictionResult out;
  out.image_id = test.id;
  out.draws = use.size();
  out.prob.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) out.prob[im.perm[k]] = std::clamp(acc[k] / contributions, 0.0, 1.0);
  return out;
}

std::vector<double> smooth_probs(const std::vector<double>& prob, const Coords& s, double bandwidth) {
  if (!(bandwidth > 0.0)) throw InputError("smoothing bandwidth must be positive");
  if (prob.size() != s.size()) throw InputError("probabilities and coordinates differ in length");
  const auto n = static_cast<std::ptrdiff_t>(s.size());
  std::vector<double> out(s.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
      const double u = distance(s[static_cast<std::size_t>(j)], s[k]) / bandwidth;
      const double kw = std::exp(-0.5 * u * u);
      num += kw * prob[k];
      den += kw;
    }
    out[static_cast<std::size_t>(j)] = num / den;
  }
  return out;
}

namespace reference {

std::vector<double> smooth_probs(const std::vector<double>& prob, const Coords& s, double bandwidth) {
  if (!(bandwidth > 0.0)) throw InputError("smoothing bandwidth must be positive");
  if (prob.size() != s.size()) throw InputError("probabilities and coordinates differ in length");
  std::vector<double> out(s.size());
  for (std::size_t j = 0; j < s.size(); ++j) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
      const double u = distance(s[j], s[k]) / bandwidth;
      const double kw = std::exp(-0.5 * u * u);
      num += kw * prob[k];
      den += kw;
    }
    out[j] = num / den;
  }
  return out;
}

}  // namespace reference

PredictionResult predict_and_smooth(const VoxelImage& test, const ChainSet& chains, const PredictConfig& config) {
  PredictionResult r = predict_image(test, chains, config);
  if (chains.spec.smoothing_bandwidth) r.prob = smooth_probs(r.prob, test.coords, *chains.spec.smoothing_bandwidth);
  return r;
}

}  // namespace spvc
