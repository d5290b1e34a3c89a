#include "spvc/nngp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spvc/errors.hpp"
#include "spvc/linalg.hpp"

namespace spvc {

namespace {

std::vector<std::size_t> nearest_earlier(const Coords& ordered, std::size_t j, std::size_t m) {
  const std::size_t k = std::min(j, m);
  std::vector<std::pair<double, std::size_t>> cand(j);
  for (std::size_t i = 0; i < j; ++i) cand[i] = {distance(ordered[j], ordered[i]), i};
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = cand[i].second;
  return out;
}

}  // namespace

std::vector<std::size_t> order_voxels(const Coords& s) {
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return s[a].x < s[b].x || (s[a].x == s[b].x && s[a].y < s[b].y);
  });
  return idx;
}

NeighborGraph build_neighbors(const Coords& ordered, std::size_t m) {
  if (m < 1) throw InputError("build_neighbors: m must be >= 1");
  NeighborGraph g;
  g.m = m;
  g.order.resize(ordered.size());
  std::iota(g.order.begin(), g.order.end(), 0);
  g.neighbors.resize(ordered.size());
  const auto n = static_cast<std::ptrdiff_t>(ordered.size());
#pragma omp parallel for schedule(dynamic, 32)
  for (std::ptrdiff_t j = 0; j < n; ++j)
    g.neighbors[static_cast<std::size_t>(j)] = nearest_earlier(ordered, static_cast<std::size_t>(j), m);
  return g;
}

NeighborGraph make_neighbor_graph(const Coords& s, std::size_t m) {
  const auto order = order_voxels(s);
  Coords ordered;
  ordered.reserve(s.size());
  for (auto v : order) ordered.push_back(s[v]);
  NeighborGraph g = build_neighbors(ordered, m);
  g.order = order;
  for (auto& nb : g.neighbors)
    for (auto& v : nb) v = order[v];
  return g;
}

NNGPGeometry::NNGPGeometry(std::shared_ptr<const NeighborGraph> graph, const Coords& s)
    : graph_(std::move(graph)) {
  const NeighborGraph& g = *graph_;
  const std::size_t n = g.size();
  if (s.size() != n) throw InputError("NNGPGeometry: graph and coordinates differ in size");
  pair_slots_.resize(n);
  children_.resize(n);
  position_.assign(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    position_[g.order[k]] = k;
    const auto& nb = g.neighbors[k];
    auto& slots = pair_slots_[k];
    for (std::size_t a = 0; a < nb.size(); ++a)
      for (std::size_t c = 0; c < a; ++c) slots.push_back(table_.add(distance(s[nb[a]], s[nb[c]])));
    for (std::size_t a = 0; a < nb.size(); ++a) slots.push_back(table_.add(distance(s[g.order[k]], s[nb[a]])));
    for (std::size_t a = 0; a < nb.size(); ++a) children_[nb[a]].emplace_back(k, a);
  }
  table_.freeze();
  for (auto& slots : pair_slots_)
    for (auto& t : slots) t = table_.slot(t);
}

void NNGPGeometry::factor_at(std::size_t k, const std::vector<double>& cov, double sigma2,
                             std::vector<double>& b, double& f, bool& jittered) const {
  const auto& slots = pair_slots_[k];
  const auto q = static_cast<Eigen::Index>(graph_->neighbors[k].size());
  b.assign(static_cast<std::size_t>(q), 0.0);
  if (q == 0) {
    f = sigma2;
    return;
  }
  Eigen::MatrixXd cn(q, q);
  Eigen::VectorXd c(q);
  std::size_t t = 0;
  for (Eigen::Index a = 0; a < q; ++a) {
    cn(a, a) = sigma2;
    for (Eigen::Index e = 0; e < a; ++e) {
      cn(a, e) = cov[slots[t]];
      cn(e, a) = cn(a, e);
      ++t;
    }
  }
  for (Eigen::Index a = 0; a < q; ++a) c[a] = cov[slots[t++]];
  SpdFactor fac = factor_spd(cn, sigma2);
  Eigen::VectorXd w = fac.solve(c);
  f = sigma2 - c.dot(w);
  if (fac.jittered || !(f > kJitter * sigma2)) {
    jittered = true;
    f = std::max(f, kJitter * sigma2);
  }
  for (Eigen::Index a = 0; a < q; ++a) b[static_cast<std::size_t>(a)] = w[a];
}

NNGPFactor NNGPGeometry::factors(const MaternParams& theta) const {
  theta.validate();
  const std::vector<double> cov = table_.covariances(theta);
  const std::size_t n = graph_->size();
  NNGPFactor out;
  out.graph = graph_;
  out.b.resize(n);
  out.f.resize(n);
  std::vector<char> jit(n, 0);
  const auto nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < nn; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    bool j = false;
    factor_at(kk, cov, theta.sigma2, out.b[kk], out.f[kk], j);
    jit[kk] = j;
  }
  out.jittered = std::any_of(jit.begin(), jit.end(), [](char c) { return c != 0; });
  return out;
}

NNGPFactor nngp_factors(std::shared_ptr<const NeighborGraph> graph, const Coords& s,
                        const MaternParams& theta) {
  return NNGPGeometry(std::move(graph), s).factors(theta);
}

double nngp_logdensity(const Eigen::VectorXd& w, const NNGPFactor& factors) {
  const NeighborGraph& g = *factors.graph;
  if (static_cast<std::size_t>(w.size()) != g.size())
    throw InputError("nngp_logdensity: field length does not match graph");
  double s = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    double mean = 0.0;
    const auto& nb = g.neighbors[k];
    for (std::size_t a = 0; a < nb.size(); ++a) mean += factors.b[k][a] * w[static_cast<Eigen::Index>(nb[a])];
    const double r = w[static_cast<Eigen::Index>(g.order[k])] - mean;
    s += kLog2Pi + std::log(factors.f[k]) + r * r / factors.f[k];
  }
  return -0.5 * s;
}

Eigen::VectorXd nngp_whiten(const Eigen::VectorXd& w, const NNGPFactor& factors) {
  const NeighborGraph& g = *factors.graph;
  Eigen::VectorXd z(static_cast<Eigen::Index>(g.size()));
  for (std::size_t k = 0; k < g.size(); ++k) {
    double mean = 0.0;
    const auto& nb = g.neighbors[k];
    for (std::size_t a = 0; a < nb.size(); ++a) mean += factors.b[k][a] * w[static_cast<Eigen::Index>(nb[a])];
    z[static_cast<Eigen::Index>(k)] = (w[static_cast<Eigen::Index>(g.order[k])] - mean) / std::sqrt(factors.f[k]);
  }
  return z;
}

Eigen::VectorXd nngp_color(const Eigen::VectorXd& z, const NNGPFactor& factors) {
  const NeighborGraph& g = *factors.graph;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.size()));
  for (std::size_t k = 0; k < g.size(); ++k) {
    double mean = 0.0;
    const auto& nb = g.neighbors[k];
    for (std::size_t a = 0; a < nb.size(); ++a) mean += factors.b[k][a] * w[static_cast<Eigen::Index>(nb[a])];
    w[static_cast<Eigen::Index>(g.order[k])] = mean + std::sqrt(factors.f[k]) * z[static_cast<Eigen::Index>(k)];
  }
  return w;
}

Eigen::VectorXd nngp_sample(const NNGPFactor& factors, Stream& rng) {
  return nngp_color(standard_normal_vector(static_cast<Eigen::Index>(factors.graph->size()), rng), factors);
}

Eigen::VectorXd nngp_sample(const NNGPFactor& factors, std::uint64_t seed) {
  Stream rng(seed);
  return nngp_sample(factors, rng);
}

Eigen::SparseMatrix<double> nngp_precision(const NNGPFactor& factors) {
  const NeighborGraph& g = *factors.graph;
  const auto n = static_cast<Eigen::Index>(g.size());
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<std::size_t> idx;
  std::vector<double> coef;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const auto& nb = g.neighbors[k];
    idx.assign(1, g.order[k]);
    coef.assign(1, 1.0);
    for (std::size_t a = 0; a < nb.size(); ++a) {
      idx.push_back(nb[a]);
      coef.push_back(-factors.b[k][a]);
    }
    const double inv_f = 1.0 / factors.f[k];
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t c = 0; c < idx.size(); ++c)
        trip.emplace_back(static_cast<Eigen::Index>(idx[a]), static_cast<Eigen::Index>(idx[c]),
                          coef[a] * coef[c] * inv_f);
  }
  Eigen::SparseMatrix<double> q(n, n);
  q.setFromTriplets(trip.begin(), trip.end());
  return q;
}

std::size_t offdiag_nonzeros(const Eigen::SparseMatrix<double>& a) {
  std::size_t count = 0;
  for (Eigen::Index col = 0; col < a.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, col); it; ++it)
      if (it.row() != it.col()) ++count;
  return count;
}

void nngp_gibbs_sweep(const NNGPGeometry& geometry, const NNGPFactor& factors, Eigen::VectorXd& w,
                      const Eigen::VectorXd& resid, double noise_precision, Stream& rng) {
  const NeighborGraph& g = geometry.graph();
  for (std::size_t k = 0; k < g.size(); ++k) {
    const std::size_t v = g.order[k];
    const auto& nb = g.neighbors[k];
    double mean_own = 0.0;
    for (std::size_t a = 0; a < nb.size(); ++a) mean_own += factors.b[k][a] * w[static_cast<Eigen::Index>(nb[a])];
    double prec = 1.0 / factors.f[k] + noise_precision;
    double num = mean_own / factors.f[k] + noise_precision * resid[static_cast<Eigen::Index>(v)];
    for (const auto& [t, l] : geometry.children(v)) {
      const auto& nbt = g.neighbors[t];
      const double btl = factors.b[t][l];
      double partial = w[static_cast<Eigen::Index>(g.order[t])];
      for (std::size_t a = 0; a < nbt.size(); ++a)
        if (a != l) partial -= factors.b[t][a] * w[static_cast<Eigen::Index>(nbt[a])];
      prec += btl * btl / factors.f[t];
      num += btl * partial / factors.f[t];
    }
    w[static_cast<Eigen::Index>(v)] = num / prec + rng.normal() / std::sqrt(prec);
  }
}

namespace reference {

NNGPFactor nngp_factors(const NNGPGeometry& geometry, const MaternParams& theta) {
  theta.validate();
  const NeighborGraph& g = geometry.graph();
  NNGPFactor out;
  out.graph = geometry.graph_ptr();
  out.b.resize(g.size());
  out.f.resize(g.size());
  const std::vector<double> cov = geometry.covariances(theta);
  for (std::size_t k = 0; k < g.size(); ++k) {
    bool j = false;
    geometry.factor_at(k, cov, theta.sigma2, out.b[k], out.f[k], j);
    out.jittered = out.jittered || j;
  }
  return out;
}

NeighborGraph build_neighbors(const Coords& ordered, std::size_t m) {
  if (m < 1) throw InputError("build_neighbors: m must be >= 1");
  NeighborGraph g;
  g.m = m;
  g.order.resize(ordered.size());
  std::iota(g.order.begin(), g.order.end(), 0);
  g.neighbors.resize(ordered.size());
  for (std::size_t j = 0; j < ordered.size(); ++j) g.neighbors[j] = nearest_earlier(ordered, j, m);
  return g;
}

}  // namespace reference

}  // namespace spvc
