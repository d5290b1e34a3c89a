#include "spvc/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "spvc/errors.hpp"

namespace spvc {

void MaternParams::validate() const {
  auto ok = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!ok(sigma2) || !ok(phi) || !ok(nu)) {
    std::ostringstream msg;
    msg << "Matern parameters must be finite and positive (sigma2=" << sigma2 << ", phi=" << phi
        << ", nu=" << nu << ")";
    throw InputError(msg.str());
  }
}

double matern_corr(double dist, double phi, double nu) {
  if (!std::isfinite(dist) || dist < 0.0 || !std::isfinite(phi) || !(phi > 0.0) ||
      !std::isfinite(nu) || !(nu > 0.0)) {
    throw InputError("matern_corr: invalid arguments");
  }
  if (dist == 0.0) return 1.0;
  if (nu == 0.5) return std::exp(-std::sqrt(2.0) * dist / phi);
  if (nu == 1.5) {
    const double x = std::sqrt(6.0) * dist / phi;
    return (1.0 + x) * std::exp(-x);
  }
  const double x = 2.0 * std::sqrt(nu) * dist / phi;
  if (x > 700.0) return 0.0;
  const double k = std::cyl_bessel_k(nu, x);
  if (!std::isfinite(k)) return 1.0;  // x so small that K_nu overflows: rho is 1 to double precision
  if (k <= 0.0) return 0.0;
  const double log_rho = nu * std::log(x) + std::log(k) - (nu - 1.0) * std::log(2.0) - std::lgamma(nu);
  return std::min(1.0, std::exp(log_rho));
}

namespace {

void check_distinct_points(const Coords& s) {
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return s[a].x < s[b].x || (s[a].x == s[b].x && s[a].y < s[b].y);
  });
  for (std::size_t k = 1; k < idx.size(); ++k) {
    if (s[idx[k]] == s[idx[k - 1]]) throw InputError("cov_matrix: duplicate coordinates");
  }
}

}  // namespace

Eigen::MatrixXd cov_matrix(const Coords& s, const MaternParams& theta) {
  theta.validate();
  check_distinct_points(s);
  const auto n = static_cast<Eigen::Index>(s.size());
  Eigen::MatrixXd c(n, n);
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index j = 0; j < n; ++j) {
    c(j, j) = theta.sigma2;
    for (Eigen::Index k = 0; k < j; ++k) {
      const double v = matern_cov(distance(s[j], s[k]), theta);
      c(j, k) = v;
      c(k, j) = v;
    }
  }
  return c;
}

Eigen::MatrixXd cross_cov(const Coords& a, const Coords& b, const MaternParams& theta) {
  theta.validate();
  const auto na = static_cast<Eigen::Index>(a.size());
  const auto nb = static_cast<Eigen::Index>(b.size());
  Eigen::MatrixXd c(na, nb);
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < na; ++j)
    for (Eigen::Index k = 0; k < nb; ++k) c(j, k) = matern_cov(distance(a[j], b[k]), theta);
  return c;
}

std::size_t DistanceTable::add(double d) {
  raw_.push_back(d);
  return raw_.size() - 1;
}

void DistanceTable::freeze() {
  std::vector<std::size_t> idx(raw_.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return raw_[a] < raw_[b]; });
  values_.clear();
  remap_.assign(raw_.size(), 0);
  for (std::size_t t : idx) {
    const double d = raw_[t];
    if (values_.empty() || d - values_.back() > 1e-12 * std::max(1.0, d)) values_.push_back(d);
    remap_[t] = values_.size() - 1;
  }
  raw_.clear();
  raw_.shrink_to_fit();
}

std::vector<double> DistanceTable::covariances(const MaternParams& theta) const {
  std::vector<double> out(values_.size());
  for (std::size_t k = 0; k < values_.size(); ++k) out[k] = matern_cov(values_[k], theta);
  return out;
}

namespace reference {

Eigen::MatrixXd cov_matrix(const Coords& s, const MaternParams& theta) {
  theta.validate();
  check_distinct_points(s);
  const auto n = static_cast<Eigen::Index>(s.size());
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    c(j, j) = theta.sigma2;
    for (Eigen::Index k = 0; k < j; ++k) {
      const double v = matern_cov(distance(s[j], s[k]), theta);
      c(j, k) = v;
      c(k, j) = v;
    }
  }
  return c;
}

}  // namespace reference

}  // namespace spvc
