#include "spvc/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iostream>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "spvc/errors.hpp"
#include "spvc/linalg.hpp"

namespace spvc {

namespace {

enum Purpose : std::uint64_t {
  kKappa = 1,
  kField = 2,
  kThetaCentered = 3,
  kThetaStandardized = 4,
  kMuGamma = 5,
  kDelta = 6,
  kSigma = 7,
  kInit = 8,
};

double probit(double p) { return boost::math::quantile(boost::math::normal(), p); }

Eigen::VectorXd log_theta(const MaternParams& t, std::size_t dims) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(dims));
  if (dims >= 1) v[0] = std::log(t.sigma2);
  if (dims >= 3) {
    v[1] = std::log(t.phi);
    v[2] = std::log(t.nu);
  }
  return v;
}

MaternParams from_log_theta(const Eigen::VectorXd& v, const MaternParams& base) {
  MaternParams t = base;
  if (v.size() >= 1) t.sigma2 = std::exp(v[0]);
  if (v.size() >= 3) {
    t.phi = std::exp(v[1]);
    t.nu = std::exp(v[2]);
  }
  return t;
}

// Draw from N(precision^{-1} lin, precision^{-1}).
Eigen::VectorXd sample_canonical(const Eigen::MatrixXd& precision, const Eigen::VectorXd& lin, Stream& rng) {
  const SpdFactor f = factor_spd(precision, precision.diagonal().maxCoeff());
  const Eigen::VectorXd z = standard_normal_vector(lin.size(), rng);
  return f.solve(lin) + f.llt.matrixU().solve(z);
}

// -0.5 sum (kappa - q0[r] - eta)^2
double probit_loglik(const ImageState& im, const std::array<double, 2>& q0, const Eigen::VectorXd& eta) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < im.kappa.size(); ++j) {
    const double r = im.kappa[j] - q0[im.region[static_cast<std::size_t>(j)]] - eta[j];
    s += r * r;
  }
  return -0.5 * s;
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

// Statistics of complete-feature voxels per stratum.
std::array<StratumStats, 4> stratum_stats(const std::vector<std::uint8_t>& region,
                                          const std::vector<std::uint8_t>& labels, const Eigen::MatrixXd& y) {
  std::array<StratumStats, 4> out;
  for (auto& st : out) {
    st.sum = Eigen::VectorXd::Zero(y.cols());
    st.outer = Eigen::MatrixXd::Zero(y.cols(), y.cols());
  }
  for (Eigen::Index j = 0; j < y.rows(); ++j) {
    if (!y.row(j).allFinite()) continue;
    const Eigen::VectorXd v = y.row(j).transpose();
    const auto k = static_cast<std::size_t>(j);
    StratumStats& st = out[stratum(labels[k], region[k])];
    st.count += 1;
    st.sum += v;
    st.outer.noalias() += v * v.transpose();
  }
  return out;
}

std::string describe(const Globals& g) {
  std::ostringstream out;
  out.precision(17);
  for (int s = 0; s < 4; ++s) {
    out << "\n  mu[" << s << "] = " << g.mu[s].transpose();
    out << "\n  gamma[" << s << "] =\n" << g.gamma[s];
  }
  out << "\n  sigma =\n" << g.sigma;
  out << "\n  theta = (" << g.theta.sigma2 << ", " << g.theta.phi << ", " << g.theta.nu << ")";
  out << "\n  q0 = (" << g.q0[0] << ", " << g.q0[1] << ")";
  return out.str();
}

}  // namespace

std::array<double, 2> compute_q0(const Dataset& train) {
  std::array<double, 2> pos{0, 0}, total{0, 0};
  for (const auto& im : train.images) {
    if (!im.labeled()) throw InputError("image " + im.id + " has no labels");
    for (std::size_t j = 0; j < im.size(); ++j) {
      total[im.region[j]] += 1;
      pos[im.region[j]] += (*im.labels)[j];
    }
  }
  std::array<double, 2> q0{};
  for (int r = 0; r < 2; ++r) {
    const char* name = r == 1 ? "PZ" : "CG";
    if (total[r] == 0)
      throw InputError(std::string("region ") + name + " has no labeled voxels; pool the regions into one");
    if (pos[r] == 0 || pos[r] == total[r])
      throw InputError(std::string("region ") + name +
                       " has a degenerate prevalence (all labels equal); pool the regions into one");
    q0[r] = probit(pos[r] / total[r]);
  }
  return q0;
}

void McmcConfig::validate() const {
  std::vector<std::string> problems;
  if (chains < 1) problems.push_back("chains must be at least 1");
  if (iters < 1) problems.push_back("iters must be at least 1");
  if (thin < 1) problems.push_back("thin must be at least 1");
  if (!problems.empty()) {
    std::string msg = "invalid mcmc settings:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
}

Sampler::Sampler(const Dataset& train, const ModelSpec& spec, std::uint64_t seed, std::size_t chain)
    : spec_(spec), seed_(seed), chain_(chain) {
  spec_.validate();
  train.validate();
  if (train.images.empty()) throw InputError("training set is empty");
  d_ = train.dim();
  g_.q0 = compute_q0(train);

  const std::size_t dims = theta_dims(spec_);
  if (spec_.theta_fixed) {
    g_.theta = *spec_.theta_fixed;
  } else {
    g_.theta = spec_.theta_init;
    if (dims > 0) {
      Stream rng = stream(kInit);
      Eigen::VectorXd lt = log_theta(g_.theta, dims);
      for (Eigen::Index k = 0; k < lt.size(); ++k) lt[k] += defaults::kInitJitter * rng.normal();
      const MaternParams jittered = from_log_theta(lt, g_.theta);
      if (theta_in_support(spec_, jittered)) g_.theta = jittered;
    }
  }

  std::vector<const VoxelImage*> sorted;
  for (const auto& im : train.images) sorted.push_back(&im);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->id < b->id; });

  images_.resize(sorted.size());
  std::array<StratumStats, 4> pooled;
  for (auto& p : pooled) {
    p.sum = Eigen::VectorXd::Zero(d_);
    p.outer = Eigen::MatrixXd::Zero(d_, d_);
  }
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const VoxelImage& src = *sorted[i];
    if (!src.labeled()) throw InputError("image " + src.id + " has no labels");
    ImageState& im = images_[i];
    im.id = src.id;
    im.key = fnv1a(src.id);
    im.region = src.region;
    im.labels = *src.labels;
    im.stats = stratum_stats(im.region, im.labels, src.features);
    for (int s = 0; s < 4; ++s) {
      pooled[s].count += im.stats[s].count;
      pooled[s].sum += im.stats[s].sum;
      pooled[s].outer += im.stats[s].outer;
    }
    im.delta = Eigen::VectorXd::Zero(d_);
    const auto n = static_cast<Eigen::Index>(src.size());
    im.kappa = Eigen::VectorXd::Zero(n);
    im.eta = Eigen::VectorXd::Zero(n);
    if (is_spatial(spec_.variant)) {
      im.field = make_spatial_field(spec_, src.coords, g_.theta);
      im.w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(im.field->state_size()));
    }
  }

  for (int s = 0; s < 4; ++s) {
    const StratumStats& p = pooled[s];
    if (p.count > 0) {
      g_.mu[s] = p.sum / p.count;
    } else {
      g_.mu[s] = Eigen::VectorXd::Zero(d_);
    }
    if (p.count > static_cast<double>(d_) + 1) {
      g_.gamma[s] = symmetrize((p.outer - p.count * g_.mu[s] * g_.mu[s].transpose()) / (p.count - 1));
    } else {
      g_.gamma[s] = Eigen::MatrixXd::Identity(d_, d_);
    }
  }
  g_.sigma = has_sse(spec_.variant) ? Eigen::MatrixXd(0.1 * Eigen::MatrixXd::Identity(d_, d_))
                                    : Eigen::MatrixXd::Zero(d_, d_);

  for (auto& rw : rw_) rw.chol = defaults::kInitialStep * Eigen::MatrixXd::Identity(dims, dims);
  adapting_ = true;
}

Stream Sampler::stream(std::uint64_t purpose, std::uint64_t key) const {
  return Stream(seed_, {static_cast<std::uint64_t>(chain_), static_cast<std::uint64_t>(iter_), purpose, key});
}

void Sampler::refresh_fields() {
  if (!is_spatial(spec_.variant)) return;
  for (auto& im : images_) {
    im.field->reset(g_.theta);
    im.eta = im.field->field(im.w, SpatialField::Slot::Current);
  }
}

void Sampler::update_kappa() {
  if (!is_spatial(spec_.variant)) return;
  const auto count = static_cast<std::ptrdiff_t>(images_.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    ImageState& im = images_[static_cast<std::size_t>(i)];
    Stream rng = stream(kKappa, im.key);
    for (Eigen::Index j = 0; j < im.kappa.size(); ++j) {
      const auto v = static_cast<std::size_t>(j);
      im.kappa[j] = sample_probit_latent(g_.q0[im.region[v]] + im.eta[j], im.labels[v] != 0, rng);
    }
  }
}

void Sampler::update_w() {
  if (!is_spatial(spec_.variant)) return;
  const auto count = static_cast<std::ptrdiff_t>(images_.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    ImageState& im = images_[static_cast<std::size_t>(i)];
    Stream rng = stream(kField, im.key);
    Eigen::VectorXd resid(im.kappa.size());
    for (Eigen::Index j = 0; j < resid.size(); ++j)
      resid[j] = im.kappa[j] - g_.q0[im.region[static_cast<std::size_t>(j)]];
    im.field->gibbs(im.w, resid, rng);
    im.eta = im.field->field(im.w, SpatialField::Slot::Current);
  }
}

int Sampler::theta_move(bool standardized, RandomWalk& rw, std::uint64_t purpose) {
  const std::size_t dims = theta_dims(spec_);
  Stream rng = stream(purpose);
  const Eigen::VectorXd z = standard_normal_vector(static_cast<Eigen::Index>(dims), rng);
  const Eigen::VectorXd lt = log_theta(g_.theta, dims);
  const Eigen::VectorXd prop = lt + std::exp(rw.log_scale) * (rw.chol * z);
  const MaternParams next = from_log_theta(prop, g_.theta);
  ++rw.proposed;
  ++rw.window_proposed;
  const double log_u = std::log(rng.uniform());
  if (!theta_in_support(spec_, next)) return 0;

  const auto count = static_cast<std::ptrdiff_t>(images_.size());
  std::vector<double> diff(images_.size(), 0.0);
  std::vector<Eigen::VectorXd> w_next(standardized ? images_.size() : 0);
  std::vector<Eigen::VectorXd> eta_next(images_.size());
  std::vector<char> failed(images_.size(), 0);
  using Slot = SpatialField::Slot;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ii = 0; ii < count; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    ImageState& im = images_[i];
    try {
      im.field->prepare(next);
      if (standardized) {
        w_next[i] = im.field->unstandardize(im.field->standardize(im.w, Slot::Current), Slot::Pending);
        eta_next[i] = im.field->field(w_next[i], Slot::Pending);
        diff[i] = probit_loglik(im, g_.q0, eta_next[i]) - probit_loglik(im, g_.q0, im.eta);
      } else {
        diff[i] = im.field->log_prior(im.w, Slot::Pending) - im.field->log_prior(im.w, Slot::Current);
        if (im.field->field_depends_on_theta()) {
          eta_next[i] = im.field->field(im.w, Slot::Pending);
          diff[i] += probit_loglik(im, g_.q0, eta_next[i]) - probit_loglik(im, g_.q0, im.eta);
        }
      }
      if (!std::isfinite(diff[i])) failed[i] = 1;
    } catch (const NumericalError&) {
      failed[i] = 1;
    }
  }
  double total = 0.0;
  for (std::size_t i = 0; i < images_.size(); ++i) {
    if (failed[i]) return 0;
    total += diff[i];
  }
  if (!(log_u < total)) return 0;
  for (std::size_t i = 0; i < images_.size(); ++i) {
    ImageState& im = images_[i];
    im.field->commit();
    if (standardized) {
      im.w = std::move(w_next[i]);
      im.eta = std::move(eta_next[i]);
    } else if (im.field->field_depends_on_theta()) {
      im.eta = std::move(eta_next[i]);
    }
  }
  g_.theta = next;
  ++rw.accepted;
  ++rw.window_accepted;
  return 1;
}

int Sampler::update_theta() {
  if (theta_dims(spec_) == 0 || spec_.theta_fixed) return 0;
  int accepted = theta_move(false, rw_[0], kThetaCentered);
  accepted += theta_move(true, rw_[1], kThetaStandardized);
  if (adapting_) log_theta_history_.push_back(log_theta(g_.theta, theta_dims(spec_)));
  return accepted;
}

void Sampler::update_mu_gamma() {
  const auto& h = spec_.hyper;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d_, d_);
  for (int s = 0; s < 4; ++s) {
    Stream rng = stream(kMuGamma, static_cast<std::uint64_t>(s));
    double n = 0.0;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(d_);
    for (const auto& im : images_) {
      const StratumStats& st = im.stats[s];
      n += st.count;
      sum += st.sum - st.count * im.delta;
    }
    if (n == 0.0) {
      if (!warned_empty_) {
        std::cerr << "warning: stratum (c=" << s / 2 << ", r=" << s % 2
                  << ") has no complete training voxels; its parameters follow the prior\n";
        warned_empty_ = true;
      }
      g_.mu[s] = std::sqrt(h.mu_prior_var) * standard_normal_vector(d_, rng);
      g_.gamma[s] = sample_inverse_wishart(static_cast<double>(d_) + h.gamma_df_extra, h.gamma_scale * eye, rng);
      continue;
    }
    const Eigen::MatrixXd gamma_inv = factor_spd(g_.gamma[s], g_.gamma[s].diagonal().maxCoeff()).inverse();
    const Eigen::MatrixXd prec = eye / h.mu_prior_var + n * gamma_inv;
    g_.mu[s] = sample_canonical(prec, gamma_inv * sum, rng);

    Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d_, d_);
    for (const auto& im : images_) {
      const StratumStats& st = im.stats[s];
      if (st.count == 0.0) continue;
      const Eigen::VectorXd a = g_.mu[s] + im.delta;
      scatter += st.outer - st.sum * a.transpose() - a * st.sum.transpose() + st.count * a * a.transpose();
    }
    g_.gamma[s] = sample_inverse_wishart(static_cast<double>(d_) + h.gamma_df_extra + n,
                                         h.gamma_scale * eye + symmetrize(scatter), rng);
  }
}

void Sampler::update_delta_sigma() {
  if (!has_sse(spec_.variant)) return;
  const auto& h = spec_.hyper;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d_, d_);
  std::array<Eigen::MatrixXd, 4> gamma_inv;
  for (int s = 0; s < 4; ++s) gamma_inv[s] = factor_spd(g_.gamma[s], g_.gamma[s].diagonal().maxCoeff()).inverse();
  const Eigen::MatrixXd sigma_inv = factor_spd(g_.sigma, g_.sigma.diagonal().maxCoeff()).inverse();

  const auto count = static_cast<std::ptrdiff_t>(images_.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    ImageState& im = images_[static_cast<std::size_t>(i)];
    Stream rng = stream(kDelta, im.key);
    Eigen::MatrixXd prec = sigma_inv;
    Eigen::VectorXd lin = Eigen::VectorXd::Zero(d_);
    for (int s = 0; s < 4; ++s) {
      const StratumStats& st = im.stats[s];
      if (st.count == 0.0) continue;
      prec += st.count * gamma_inv[s];
      lin += gamma_inv[s] * (st.sum - st.count * g_.mu[s]);
    }
    im.delta = sample_canonical(prec, lin, rng);
  }

  Stream rng = stream(kSigma);
  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d_, d_);
  for (const auto& im : images_) scatter.noalias() += im.delta * im.delta.transpose();
  g_.sigma = sample_inverse_wishart(static_cast<double>(d_) + h.sigma_df_extra + static_cast<double>(images_.size()),
                                    h.sigma_scale * eye + symmetrize(scatter), rng);
}

void Sampler::step() {
  try {
    update_kappa();
    update_w();
    update_theta();
    update_mu_gamma();
    update_delta_sigma();
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(e.what()) + "\nchain " + std::to_string(chain_) + ", iteration " +
                         std::to_string(iter_) + ", state:" + describe(g_));
  }
  ++iter_;
  if (adapting_) adapt();
}

void Sampler::adapt() {
  const std::size_t dims = theta_dims(spec_);
  if (dims == 0 || spec_.theta_fixed || iter_ % defaults::kAdaptWindow != 0) return;
  const double batch = static_cast<double>(iter_ / defaults::kAdaptWindow);
  const double gain = std::min(1.0, 3.0 / std::sqrt(batch));
  for (auto& rw : rw_) {
    if (rw.window_proposed == 0) continue;
    const double rate = static_cast<double>(rw.window_accepted) / static_cast<double>(rw.window_proposed);
    rw.log_scale += gain * (rate - defaults::kTargetAcceptance);
    rw.window_proposed = rw.window_accepted = 0;
  }
  const std::size_t hist = log_theta_history_.size();
  if (hist < defaults::kAdaptCovMin) return;
  // empirical covariance of the second half of the history
  const std::size_t from = hist / 2;
  const auto k = static_cast<Eigen::Index>(dims);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(k);
  for (std::size_t t = from; t < hist; ++t) mean += log_theta_history_[t];
  mean /= static_cast<double>(hist - from);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(k, k);
  for (std::size_t t = from; t < hist; ++t) {
    const Eigen::VectorXd c = log_theta_history_[t] - mean;
    cov.noalias() += c * c.transpose();
  }
  cov /= static_cast<double>(hist - from - 1);
  cov *= 2.38 * 2.38 / static_cast<double>(dims);
  cov.diagonal().array() += 1e-8;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) return;
  const Eigen::MatrixXd chol = llt.matrixL();
  for (auto& rw : rw_) rw.chol = chol;
}

void Sampler::set_image_data(std::size_t image, const std::vector<std::uint8_t>& labels,
                             const Eigen::MatrixXd& features) {
  ImageState& im = images_.at(image);
  if (labels.size() != im.region.size() || features.rows() != static_cast<Eigen::Index>(labels.size()) ||
      features.cols() != d_)
    throw InputError("replacement data does not match image " + im.id);
  im.labels = labels;
  im.stats = stratum_stats(im.region, im.labels, features);
}

void Sampler::set_proposal(int move, const Eigen::MatrixXd& chol, double log_scale) {
  RandomWalk& rw = rw_.at(static_cast<std::size_t>(move));
  const auto dims = static_cast<Eigen::Index>(theta_dims(spec_));
  if (chol.rows() != dims || chol.cols() != dims) throw InputError("proposal has the wrong dimension");
  rw.chol = chol;
  rw.log_scale = log_scale;
}

void Sampler::freeze_adaptation() {
  adapting_ = false;
  log_theta_history_.clear();
  for (auto& rw : rw_) rw.proposed = rw.accepted = rw.window_proposed = rw.window_accepted = 0;
}

double Sampler::acceptance_rate(int move) const {
  const RandomWalk& rw = rw_.at(static_cast<std::size_t>(move));
  return rw.proposed == 0 ? 0.0 : static_cast<double>(rw.accepted) / static_cast<double>(rw.proposed);
}

// ---------------------------------------------------------------------------

std::size_t ChainSet::total_draws() const {
  std::size_t n = 0;
  for (const auto& c : chains) n += c.draws.size();
  return n;
}

const Draw& ChainSet::draw(std::size_t index) const {
  for (const auto& c : chains) {
    if (index < c.draws.size()) return c.draws[index];
    index -= c.draws.size();
  }
  throw InputError("draw index out of range");
}

void ChainSet::validate() const {
  if (chains.empty()) throw InputError("chain set has no chains");
  const std::size_t len = chains.front().draws.size();
  for (const auto& c : chains)
    if (c.draws.size() != len) throw InputError("chains have unequal lengths");
  if (len == 0) throw InputError("chain set has no draws");
}

std::vector<std::string> ChainSet::scalar_names() const {
  std::vector<std::string> out;
  const Eigen::Index d = dim();
  for (int s = 0; s < 4; ++s)
    for (Eigen::Index k = 0; k < d; ++k)
      out.push_back("mu_c" + std::to_string(s / 2) + "_r" + std::to_string(s % 2) + "_" + std::to_string(k));
  for (int s = 0; s < 4; ++s)
    for (Eigen::Index k = 0; k < d; ++k)
      for (Eigen::Index l = k; l < d; ++l)
        out.push_back("gamma_c" + std::to_string(s / 2) + "_r" + std::to_string(s % 2) + "_" + std::to_string(k) +
                      "_" + std::to_string(l));
  const bool sse = has_sse(spec.variant);
  if (sse)
    for (Eigen::Index k = 0; k < d; ++k)
      for (Eigen::Index l = k; l < d; ++l) out.push_back("Sigma_" + std::to_string(k) + "_" + std::to_string(l));
  const std::size_t dims = theta_dims(spec);
  if (dims >= 1) out.push_back("sigma2");
  if (dims >= 3) {
    out.push_back("phi");
    out.push_back("nu");
  }
  out.push_back("q0_r0");
  out.push_back("q0_r1");
  if (sse)
    for (std::size_t i = 0; i < image_ids.size(); ++i)
      for (Eigen::Index k = 0; k < d; ++k) out.push_back("delta_" + std::to_string(i) + "_" + std::to_string(k));
  return out;
}

std::vector<double> ChainSet::scalars(const Draw& dr) const {
  std::vector<double> out;
  const Eigen::Index d = dim();
  const Globals& g = dr.globals;
  for (int s = 0; s < 4; ++s)
    for (Eigen::Index k = 0; k < d; ++k) out.push_back(g.mu[s][k]);
  for (int s = 0; s < 4; ++s)
    for (Eigen::Index k = 0; k < d; ++k)
      for (Eigen::Index l = k; l < d; ++l) out.push_back(g.gamma[s](k, l));
  const bool sse = has_sse(spec.variant);
  if (sse)
    for (Eigen::Index k = 0; k < d; ++k)
      for (Eigen::Index l = k; l < d; ++l) out.push_back(g.sigma(k, l));
  const std::size_t dims = theta_dims(spec);
  if (dims >= 1) out.push_back(g.theta.sigma2);
  if (dims >= 3) {
    out.push_back(g.theta.phi);
    out.push_back(g.theta.nu);
  }
  out.push_back(g.q0[0]);
  out.push_back(g.q0[1]);
  if (sse)
    for (const auto& v : dr.delta)
      for (Eigen::Index k = 0; k < d; ++k) out.push_back(v[k]);
  return out;
}

Draw ChainSet::from_scalars(const std::vector<double>& row) const {
  const std::size_t expected = scalar_names().size();
  if (row.size() != expected)
    throw InputError("draw has " + std::to_string(row.size()) + " values, expected " + std::to_string(expected));
  Draw dr;
  Globals& g = dr.globals;
  const Eigen::Index d = dim();
  std::size_t p = 0;
  for (int s = 0; s < 4; ++s) {
    g.mu[s].resize(d);
    for (Eigen::Index k = 0; k < d; ++k) g.mu[s][k] = row[p++];
  }
  for (int s = 0; s < 4; ++s) {
    g.gamma[s].resize(d, d);
    for (Eigen::Index k = 0; k < d; ++k)
      for (Eigen::Index l = k; l < d; ++l) g.gamma[s](k, l) = g.gamma[s](l, k) = row[p++];
  }
  const bool sse = has_sse(spec.variant);
  g.sigma = Eigen::MatrixXd::Zero(d, d);
  if (sse)
    for (Eigen::Index k = 0; k < d; ++k)
      for (Eigen::Index l = k; l < d; ++l) g.sigma(k, l) = g.sigma(l, k) = row[p++];
  g.theta = spec.theta_fixed.value_or(spec.theta_init);
  const std::size_t dims = theta_dims(spec);
  if (dims >= 1) g.theta.sigma2 = row[p++];
  if (dims >= 3) {
    g.theta.phi = row[p++];
    g.theta.nu = row[p++];
  }
  g.q0[0] = row[p++];
  g.q0[1] = row[p++];
  if (sse) {
    dr.delta.resize(image_ids.size());
    for (auto& v : dr.delta) {
      v.resize(d);
      for (Eigen::Index k = 0; k < d; ++k) v[k] = row[p++];
    }
  }
  return dr;
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> halves;
  for (const auto& c : chains) {
    const std::size_t half = c.size() / 2;
    if (half < 2) return std::nan("");
    halves.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    halves.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
  }
  const auto len = static_cast<double>(halves.front().size());
  std::vector<double> means, vars;
  for (const auto& h : halves) {
    const double m = std::accumulate(h.begin(), h.end(), 0.0) / len;
    double v = 0.0;
    for (double x : h) v += (x - m) * (x - m);
    means.push_back(m);
    vars.push_back(v / (len - 1));
  }
  const auto k = static_cast<double>(halves.size());
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / k;
  double b = 0.0;
  for (double m : means) b += (m - grand) * (m - grand);
  b *= len / (k - 1);
  const double w = std::accumulate(vars.begin(), vars.end(), 0.0) / k;
  if (!(w > 0.0)) return std::nan("");
  const double var_plus = (len - 1) / len * w + b / len;
  return std::sqrt(var_plus / w);
}

std::map<std::string, double> ChainSet::split_rhat() const {
  std::map<std::string, double> out;
  const auto names = scalar_names();
  std::vector<std::vector<std::vector<double>>> cols(names.size(), std::vector<std::vector<double>>(chains.size()));
  for (std::size_t c = 0; c < chains.size(); ++c)
    for (const auto& dr : chains[c].draws) {
      const auto row = scalars(dr);
      for (std::size_t k = 0; k < names.size(); ++k) cols[k][c].push_back(row[k]);
    }
  for (std::size_t k = 0; k < names.size(); ++k) out[names[k]] = spvc::split_rhat(cols[k]);
  return out;
}

ChainSet fixed_chainset(const ModelSpec& spec, const Globals& globals, std::vector<std::string> feature_names,
                        std::size_t copies) {
  ChainSet cs;
  cs.spec = spec;
  cs.feature_names = std::move(feature_names);
  cs.mcmc.chains = 1;
  cs.mcmc.iters = copies;
  cs.mcmc.burnin = 0;
  Chain c;
  c.draws.assign(copies, Draw{globals, {}});
  cs.chains.push_back(std::move(c));
  return cs;
}

ChainSet fit(const Dataset& train, const ModelSpec& spec, const McmcConfig& mcmc) {
  mcmc.validate();
  spec.validate();
  train.validate();
  ChainSet out;
  out.spec = spec;
  out.mcmc = mcmc;
  out.feature_names = train.feature_names;
  for (const auto& im : train.images) out.image_ids.push_back(im.id);
  std::sort(out.image_ids.begin(), out.image_ids.end());
  out.chains.resize(mcmc.chains);

  std::vector<std::exception_ptr> errors(mcmc.chains);
  const auto nchains = static_cast<std::ptrdiff_t>(mcmc.chains);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t c = 0; c < nchains; ++c) {
    const auto ci = static_cast<std::size_t>(c);
    try {
      Sampler sampler(train, spec, mcmc.seed, ci);
      for (std::size_t it = 0; it < mcmc.burnin; ++it) sampler.step();
      sampler.freeze_adaptation();
      Chain& chain = out.chains[ci];
      chain.seed = mix_seed(mcmc.seed, {static_cast<std::uint64_t>(ci)});
      for (std::size_t it = 0; it < mcmc.iters; ++it) {
        sampler.step();
        if ((it + 1) % mcmc.thin != 0) continue;
        Draw dr;
        dr.globals = sampler.globals();
        if (has_sse(spec.variant))
          for (const auto& im : sampler.images()) dr.delta.push_back(im.delta);
        chain.draws.push_back(std::move(dr));
      }
      chain.acceptance = {sampler.acceptance_rate(0), sampler.acceptance_rate(1)};
    } catch (...) {
      errors[ci] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace spvc
