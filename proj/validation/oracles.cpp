#include "spvc_validation/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace spvc::oracle {

double bessel_k_quadrature(double nu, double x) {
  // exp(-x cosh t) < 1e-300 once x cosh t > 690.
  const double tmax = std::acosh(std::max(1.0, 700.0 / x)) + 1.0;
  const int steps = 40000;
  const double h = tmax / steps;
  double s = 0.5 * std::exp(-x);
  for (int i = 1; i <= steps; ++i) {
    const double t = i * h;
    const double w = (i == steps) ? 0.5 : 1.0;
    s += w * std::exp(-x * std::cosh(t) + nu * t) * 0.5 * (1.0 + std::exp(-2.0 * nu * t));
  }
  return s * h;
}

double matern_corr_quadrature(double dist, double phi, double nu) {
  if (dist == 0.0) return 1.0;
  const double x = 2.0 * std::sqrt(nu) * dist / phi;
  return std::pow(x, nu) * bessel_k_quadrature(nu, x) / (std::pow(2.0, nu - 1.0) * std::tgamma(nu));
}

double matern_half(double dist, double phi) { return std::exp(-std::sqrt(2.0) * dist / phi); }

double matern_three_halves(double dist, double phi) {
  const double x = std::sqrt(6.0) * dist / phi;
  return (1.0 + x) * std::exp(-x);
}

std::vector<std::vector<std::size_t>> brute_force_neighbors(const Coords& ordered, std::size_t m) {
  std::vector<std::vector<std::size_t>> out(ordered.size());
  for (std::size_t j = 0; j < ordered.size(); ++j) {
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t i = 0; i < j; ++i) {
      const double dx = ordered[j].x - ordered[i].x;
      const double dy = ordered[j].y - ordered[i].y;
      all.emplace_back(std::hypot(dx, dy), i);
    }
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < std::min(m, all.size()); ++i) out[j].push_back(all[i].second);
  }
  return out;
}

double auc_pair_count(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
  double num = 0.0;
  double n1 = 0.0, n0 = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i]) n1 += 1.0; else n0 += 1.0;
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      if (scores[i] > scores[j]) num += 1.0;
      else if (scores[i] == scores[j]) num += 0.5;
    }
  }
  return num / (n1 * n0);
}

namespace {

// Asymptotic Kolmogorov distribution: P(K > lambda).
double kolmogorov_sf(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    s += term;
    if (std::abs(term) < 1e-16) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

}  // namespace

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = na * nb / (na + nb);
  const double sq = std::sqrt(ne);
  return {d, kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d)};
}

KsResult ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, std::abs(static_cast<double>(i + 1) / n - f), std::abs(f - static_cast<double>(i) / n)});
  }
  const double sq = std::sqrt(n);
  return {d, kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d)};
}

Eigen::MatrixXd dense_cov(const Coords& s, double sigma2, double phi, double nu) {
  const auto n = static_cast<Eigen::Index>(s.size());
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const double d = std::hypot(s[j].x - s[k].x, s[j].y - s[k].y);
      double r;
      if (nu == 0.5) r = matern_half(d, phi);
      else if (nu == 1.5) r = matern_three_halves(d, phi);
      else r = matern_corr_quadrature(d, phi, nu);
      c(j, k) = sigma2 * r;
    }
  }
  return c;
}

double mvn_logdensity_eigen(const Eigen::VectorXd& x, const Eigen::MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const Eigen::VectorXd proj = es.eigenvectors().transpose() * x;
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double lam = es.eigenvalues()[i];
    s += std::log(2.0 * M_PI * lam) + proj[i] * proj[i] / lam;
  }
  return -0.5 * s;
}

Eigen::MatrixXd empirical_cov(const Eigen::MatrixXd& draws) {
  const Eigen::RowVectorXd mean = draws.colwise().mean();
  const Eigen::MatrixXd centered = draws.rowwise() - mean;
  return centered.transpose() * centered / static_cast<double>(draws.rows() - 1);
}

double bayes_rule(double prior, double log_f1, double log_f0) {
  const double a = std::log(prior) + log_f1;
  const double b = std::log1p(-prior) + log_f0;
  const double mx = std::max(a, b);
  return std::exp(a - mx) / (std::exp(a - mx) + std::exp(b - mx));
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double gaussian_logpdf_observed(const Eigen::VectorXd& y, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
  std::vector<Eigen::Index> obs;
  for (Eigen::Index k = 0; k < y.size(); ++k)
    if (!std::isnan(y[k])) obs.push_back(k);
  const auto q = static_cast<Eigen::Index>(obs.size());
  if (q == 0) return 0.0;
  Eigen::VectorXd r(q);
  Eigen::MatrixXd c(q, q);
  for (Eigen::Index a = 0; a < q; ++a) {
    r[a] = y[obs[a]] - mean[obs[a]];
    for (Eigen::Index b = 0; b < q; ++b) c(a, b) = cov(obs[a], obs[b]);
  }
  const Eigen::MatrixXd inv = c.inverse();
  return -0.5 * (q * std::log(2.0 * M_PI) + std::log(c.determinant()) + r.dot(inv * r));
}

std::vector<double> enumerate_label_posterior(const std::vector<double>& log_f1, const std::vector<double>& log_f0,
                                              const std::vector<double>& q0, const Eigen::MatrixXd& cov,
                                              std::size_t draws, std::uint64_t seed) {
  const std::size_t n = q0.size();
  const std::size_t configs = std::size_t{1} << n;
  std::vector<double> prior(configs, 0.0);
  Eigen::MatrixXd l = cov.llt().matrixL();
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> norm;
  Eigen::VectorXd z(static_cast<Eigen::Index>(n));
  std::vector<double> p1(n);
  for (std::size_t t = 0; t < draws; ++t) {
    for (std::size_t j = 0; j < n; ++j) z[static_cast<Eigen::Index>(j)] = norm(eng);
    const Eigen::VectorXd w = l * z;
    for (std::size_t j = 0; j < n; ++j) p1[j] = norm_cdf(q0[j] + w[static_cast<Eigen::Index>(j)]);
    for (std::size_t c = 0; c < configs; ++c) {
      double pr = 1.0;
      for (std::size_t j = 0; j < n; ++j) pr *= ((c >> j) & 1U) ? p1[j] : 1.0 - p1[j];
      prior[c] += pr;
    }
  }
  std::vector<double> logpost(configs);
  for (std::size_t c = 0; c < configs; ++c) {
    double s = std::log(prior[c] / static_cast<double>(draws));
    for (std::size_t j = 0; j < n; ++j) s += ((c >> j) & 1U) ? log_f1[j] : log_f0[j];
    logpost[c] = s;
  }
  const double mx = *std::max_element(logpost.begin(), logpost.end());
  double total = 0.0;
  std::vector<double> marg(n, 0.0);
  for (std::size_t c = 0; c < configs; ++c) {
    const double w = std::exp(logpost[c] - mx);
    total += w;
    for (std::size_t j = 0; j < n; ++j)
      if ((c >> j) & 1U) marg[j] += w;
  }
  for (auto& v : marg) v /= total;
  return marg;
}

}  // namespace spvc::oracle
