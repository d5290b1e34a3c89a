#include "spvc/car.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "spvc/errors.hpp"
#include "spvc/linalg.hpp"

namespace spvc {

Eigen::SparseMatrix<double> CarWeights::row_normalized() const {
  Eigen::SparseMatrix<double> b = w;
  for (Eigen::Index col = 0; col < b.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(b, col); it; ++it) it.valueRef() /= d[it.row()];
  return b;
}

CarWeights car_weights(const Coords& s, std::optional<double> cutoff) {
  const auto n = static_cast<Eigen::Index>(s.size());
  if (cutoff && !(*cutoff > 0.0)) throw InputError("car_weights: cutoff must be positive");
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k == j) continue;
      const double dist = distance(s[static_cast<std::size_t>(j)], s[static_cast<std::size_t>(k)]);
      if (dist == 0.0) throw InputError("car_weights: duplicate coordinates");
      if (cutoff && dist > *cutoff) continue;
      trip.emplace_back(j, k, 1.0 / dist);
      d[j] += 1.0 / dist;
    }
    if (d[j] == 0.0) throw InputError("car_weights: voxel " + std::to_string(j) + " has no neighbors");
  }
  CarWeights out;
  out.w.resize(n, n);
  out.w.setFromTriplets(trip.begin(), trip.end());
  out.d = d;
  return out;
}

double CARPrecision::quadratic_unscaled(const Eigen::VectorXd& w) const { return w.dot(unscaled * w); }

CARPrecision car_precision(const CarWeights& weights, double sigma2, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("car_precision: alpha must lie in (0,1)");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw InputError("car_precision: sigma2 must be positive");
  CARPrecision p;
  p.weights = weights;
  p.alpha = alpha;
  p.sigma2 = sigma2;
  const auto n = weights.w.rows();
  Eigen::SparseMatrix<double> dmat(n, n);
  std::vector<Eigen::Triplet<double>> diag;
  for (Eigen::Index j = 0; j < n; ++j) diag.emplace_back(j, j, weights.d[j]);
  dmat.setFromTriplets(diag.begin(), diag.end());
  p.unscaled = dmat - alpha * weights.w;
  auto factor = std::make_shared<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>>(p.unscaled);
  if (factor->info() != Eigen::Success) throw NumericalError("car_precision: D - alpha W is not positive definite");
  p.factor = factor;
  const Eigen::SparseMatrix<double> l = factor->matrixL();
  double s = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) s += std::log(l.coeff(j, j));
  p.log_det_unscaled = 2.0 * s;
  return p;
}

double car_logdensity(const Eigen::VectorXd& w, const CARPrecision& p) {
  const auto n = static_cast<double>(w.size());
  return 0.5 * p.log_det() - 0.5 * n * kLog2Pi - 0.5 * p.quadratic_unscaled(w) / p.sigma2;
}

Eigen::VectorXd car_sample(const CARPrecision& p, Stream& rng) {
  const Eigen::VectorXd z = standard_normal_vector(p.unscaled.rows(), rng);
  Eigen::VectorXd x = p.factor->matrixU().solve(z);
  Eigen::VectorXd w = p.factor->permutationPinv() * x;
  return std::sqrt(p.sigma2) * w;
}

Eigen::VectorXd car_sample(const CARPrecision& p, std::uint64_t seed) {
  Stream rng(seed);
  return car_sample(p, rng);
}

void car_gibbs_sweep(const CARPrecision& p, Eigen::VectorXd& w, const Eigen::VectorXd& resid,
                     double noise_precision, Stream& rng) {
  const auto& m = p.unscaled;
  const double inv_s2 = 1.0 / p.sigma2;
  for (Eigen::Index j = 0; j < m.outerSize(); ++j) {
    double diag = 0.0;
    double off = 0.0;
    // Column j equals row j by symmetry.
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, j); it; ++it) {
      if (it.row() == j)
        diag = it.value();
      else
        off += it.value() * w[it.row()];
    }
    const double prec = diag * inv_s2 + noise_precision;
    const double num = noise_precision * resid[j] - off * inv_s2;
    w[j] = num / prec + rng.normal() / std::sqrt(prec);
  }
}

}  // namespace spvc
