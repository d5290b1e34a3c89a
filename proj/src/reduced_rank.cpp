#include "spvc/reduced_rank.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "spvc/errors.hpp"
#include "spvc/full_gp.hpp"

namespace spvc {

namespace {

std::size_t nearest_free(const Coords& s, const Point& target, const std::vector<char>& taken) {
  std::size_t best = s.size();
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (taken[j]) continue;
    const double d = distance(s[j], target);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

}  // namespace

std::vector<std::size_t> select_knots(const Coords& s, std::size_t a) {
  if (a == 0) throw InputError("select_knots: a must be >= 1");
  if (a > s.size()) {
    throw InputError("select_knots: " + std::to_string(a) + " knots requested for " +
                     std::to_string(s.size()) + " voxels");
  }
  std::vector<char> taken(s.size(), 0);
  if (a == 1) {
    Point c{0.0, 0.0};
    for (const auto& p : s) {
      c.x += p.x;
      c.y += p.y;
    }
    c.x /= static_cast<double>(s.size());
    c.y /= static_cast<double>(s.size());
    return {nearest_free(s, c, taken)};
  }
  double xlo = s[0].x, xhi = s[0].x, ylo = s[0].y, yhi = s[0].y;
  for (const auto& p : s) {
    xlo = std::min(xlo, p.x);
    xhi = std::max(xhi, p.x);
    ylo = std::min(ylo, p.y);
    yhi = std::max(yhi, p.y);
  }
  std::size_t rows = 1;
  for (std::size_t r = 1; r * r <= a; ++r)
    if (a % r == 0) rows = r;
  std::size_t cols = a / rows;
  if (yhi - ylo > xhi - xlo) std::swap(rows, cols);
  std::vector<std::size_t> out;
  out.reserve(a);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const Point g{xlo + (static_cast<double>(j) + 0.5) * (xhi - xlo) / static_cast<double>(cols),
                    ylo + (static_cast<double>(i) + 0.5) * (yhi - ylo) / static_cast<double>(rows)};
      const std::size_t v = nearest_free(s, g, taken);
      taken[v] = 1;
      out.push_back(v);
    }
  }
  return out;
}

KnotSet make_knot_set(const Coords& s, const std::vector<std::size_t>& knot_index, const MaternParams& theta) {
  return RRGeometry(s, knot_index).build(theta);
}

Eigen::MatrixXd rr_interpolate(const Coords& s, const KnotSet& knots, const MaternParams& theta) {
  const Eigen::MatrixXd cross = cross_cov(s, knots.coords, theta);
  const SpdFactor f = factor_spd(cov_matrix(knots.coords, theta), theta.sigma2);
  return f.solve(Eigen::MatrixXd(cross.transpose())).transpose();
}

Eigen::MatrixXd rr_cov(const Coords& s, const KnotSet& knots, const MaternParams& theta) {
  const Eigen::MatrixXd cross = cross_cov(s, knots.coords, theta);
  const SpdFactor f = factor_spd(cov_matrix(knots.coords, theta), theta.sigma2);
  Eigen::MatrixXd half = f.llt.matrixL().solve(Eigen::MatrixXd(cross.transpose()));
  Eigen::MatrixXd c = half.transpose() * half;
  return 0.5 * (c + c.transpose());
}

Eigen::VectorXd rr_sample_knots(const KnotSet& knots, Stream& rng) { return mvn_sample(knots.knot_factor, rng); }

Eigen::VectorXd rr_sample(const KnotSet& knots, std::uint64_t seed) {
  Stream rng(seed);
  return knots.interp * rr_sample_knots(knots, rng);
}

double rr_logdensity(const Eigen::VectorXd& knot_values, const KnotSet& knots) {
  return mvn_logdensity(knot_values, knots.knot_factor);
}

RRGeometry::RRGeometry(const Coords& s, std::vector<std::size_t> knot_index)
    : n_(s.size()), index_(std::move(knot_index)) {
  if (index_.empty()) throw InputError("RRGeometry: no knots");
  for (auto k : index_) {
    if (k >= n_) throw InputError("RRGeometry: knot index out of range");
    knot_coords_.push_back(s[k]);
  }
  const std::size_t a = index_.size();
  knot_slots_.resize(a * a);
  for (std::size_t i = 0; i < a; ++i)
    for (std::size_t j = 0; j < a; ++j) knot_slots_[i * a + j] = table_.add(distance(knot_coords_[i], knot_coords_[j]));
  cross_slots_.resize(n_ * a);
  for (std::size_t v = 0; v < n_; ++v)
    for (std::size_t j = 0; j < a; ++j) cross_slots_[v * a + j] = table_.add(distance(s[v], knot_coords_[j]));
  table_.freeze();
  for (auto& t : knot_slots_) t = table_.slot(t);
  for (auto& t : cross_slots_) t = table_.slot(t);
}

KnotSet RRGeometry::build(const MaternParams& theta) const {
  theta.validate();
  const std::vector<double> cov = table_.covariances(theta);
  const auto a = static_cast<Eigen::Index>(index_.size());
  const auto n = static_cast<Eigen::Index>(n_);
  KnotSet ks;
  ks.index = index_;
  ks.coords = knot_coords_;
  ks.knot_cov.resize(a, a);
  for (Eigen::Index i = 0; i < a; ++i)
    for (Eigen::Index j = 0; j < a; ++j) ks.knot_cov(i, j) = cov[knot_slots_[static_cast<std::size_t>(i * a + j)]];
  ks.knot_factor = factor_spd(ks.knot_cov, theta.sigma2);
  Eigen::MatrixXd cross_t(a, n);
  for (Eigen::Index v = 0; v < n; ++v)
    for (Eigen::Index j = 0; j < a; ++j) cross_t(j, v) = cov[cross_slots_[static_cast<std::size_t>(v * a + j)]];
  ks.interp = ks.knot_factor.solve(cross_t).transpose();
  return ks;
}

}  // namespace spvc
