#include "spvc/spatial_field.hpp"

#include <cmath>
#include <optional>

#include "spvc/car.hpp"
#include "spvc/errors.hpp"
#include "spvc/full_gp.hpp"
#include "spvc/nngp.hpp"
#include "spvc/reduced_rank.hpp"

namespace spvc {

namespace {

template <typename T>
struct Slots {
  std::optional<T> current;
  std::optional<T> pending;

  const T& at(SpatialField::Slot s) const { return s == SpatialField::Slot::Current ? *current : *pending; }
  void commit() {
    if (!pending) throw NumericalError("commit without a prepared proposal");
    current = std::move(pending);
    pending.reset();
  }
};

class NNGPField final : public SpatialField {
 public:
  NNGPField(const Coords& s, std::size_t m)
      : geo_(std::make_shared<const NeighborGraph>(make_neighbor_graph(s, std::min(m, s.size() - 1))), s) {}

  std::size_t voxels() const override { return geo_.graph().size(); }
  std::size_t state_size() const override { return voxels(); }
  void prepare(const MaternParams& theta) override { f_.pending = geo_.factors(theta); }
  void commit() override { f_.commit(); }
  double log_prior(const Eigen::VectorXd& w, Slot s) const override { return nngp_logdensity(w, f_.at(s)); }
  Eigen::VectorXd field(const Eigen::VectorXd& w, Slot) const override { return w; }
  Eigen::VectorXd standardize(const Eigen::VectorXd& w, Slot s) const override { return nngp_whiten(w, f_.at(s)); }
  Eigen::VectorXd unstandardize(const Eigen::VectorXd& u, Slot s) const override {
    return nngp_color(u, f_.at(s));
  }
  void gibbs(Eigen::VectorXd& w, const Eigen::VectorXd& resid, Stream& rng) const override {
    nngp_gibbs_sweep(geo_, *f_.current, w, resid, 1.0, rng);
  }
  Eigen::VectorXd sample_prior(Stream& rng) const override { return nngp_sample(*f_.current, rng); }
  bool jittered() const override { return f_.current->jittered; }

 private:
  NNGPGeometry geo_;
  Slots<NNGPFactor> f_;
};

struct DenseFactors {
  SpdFactor cov;
  Eigen::MatrixXd cov_matrix;
  mutable std::optional<SpdFactor> cov_plus_identity;
};

class DenseField final : public SpatialField {
 public:
  DenseField(const Coords& s, std::size_t limit) : s_(s), limit_(limit) {
    if (s.size() > limit) throw InputError("image too large for the dense model");
  }

  std::size_t voxels() const override { return s_.size(); }
  std::size_t state_size() const override { return s_.size(); }
  void prepare(const MaternParams& theta) override {
    DenseFactors d;
    d.cov_matrix = cov_matrix(s_, theta);
    d.cov = factor_spd(d.cov_matrix, theta.sigma2);
    f_.pending = std::move(d);
  }
  void commit() override { f_.commit(); }
  double log_prior(const Eigen::VectorXd& w, Slot s) const override { return mvn_logdensity(w, f_.at(s).cov); }
  Eigen::VectorXd field(const Eigen::VectorXd& w, Slot) const override { return w; }
  Eigen::VectorXd standardize(const Eigen::VectorXd& w, Slot s) const override {
    return f_.at(s).cov.llt.matrixL().solve(w);
  }
  Eigen::VectorXd unstandardize(const Eigen::VectorXd& u, Slot s) const override {
    return f_.at(s).cov.llt.matrixL() * u;
  }
  void gibbs(Eigen::VectorXd& w, const Eigen::VectorXd& resid, Stream& rng) const override {
    // Matheron update: w0 ~ prior, e ~ N(0, I), w = w0 + C (C + I)^{-1} (r - w0 - e).
    const DenseFactors& d = *f_.current;
    if (!d.cov_plus_identity) {
      Eigen::MatrixXd a = d.cov_matrix;
      a.diagonal().array() += 1.0;
      d.cov_plus_identity = factor_spd(a, 1.0);
    }
    const Eigen::VectorXd w0 = mvn_sample(d.cov, rng);
    const Eigen::VectorXd e = standard_normal_vector(static_cast<Eigen::Index>(s_.size()), rng);
    const Eigen::VectorXd u = resid - w0 - e;
    w = w0 + u - d.cov_plus_identity->solve(u);
  }
  Eigen::VectorXd sample_prior(Stream& rng) const override { return mvn_sample(f_.current->cov, rng); }
  bool jittered() const override { return f_.current->cov.jittered; }

 private:
  Coords s_;
  std::size_t limit_;
  Slots<DenseFactors> f_;
};

struct RRFactors {
  KnotSet knots;
  mutable std::optional<SpdFactor> posterior;  // C*^{-1} + A^T A
};

class RRField final : public SpatialField {
 public:
  RRField(const Coords& s, std::size_t a) : geo_(s, select_knots(s, std::min(a, s.size()))) {}

  std::size_t voxels() const override { return geo_.size(); }
  std::size_t state_size() const override { return geo_.rank(); }
  void prepare(const MaternParams& theta) override { f_.pending = RRFactors{geo_.build(theta), std::nullopt}; }
  void commit() override { f_.commit(); }
  double log_prior(const Eigen::VectorXd& w, Slot s) const override { return rr_logdensity(w, f_.at(s).knots); }
  Eigen::VectorXd field(const Eigen::VectorXd& w, Slot s) const override { return f_.at(s).knots.interp * w; }
  bool field_depends_on_theta() const override { return true; }
  Eigen::VectorXd standardize(const Eigen::VectorXd& w, Slot s) const override {
    return f_.at(s).knots.knot_factor.llt.matrixL().solve(w);
  }
  Eigen::VectorXd unstandardize(const Eigen::VectorXd& u, Slot s) const override {
    return f_.at(s).knots.knot_factor.llt.matrixL() * u;
  }
  void gibbs(Eigen::VectorXd& w, const Eigen::VectorXd& resid, Stream& rng) const override {
    const RRFactors& r = *f_.current;
    const Eigen::MatrixXd& a = r.knots.interp;
    if (!r.posterior) {
      Eigen::MatrixXd p = r.knots.knot_factor.inverse();
      p.noalias() += a.transpose() * a;
      r.posterior = factor_spd(p, p.diagonal().maxCoeff());
    }
    const Eigen::VectorXd mean = r.posterior->solve(Eigen::VectorXd(a.transpose() * resid));
    const Eigen::VectorXd z = standard_normal_vector(static_cast<Eigen::Index>(geo_.rank()), rng);
    w = mean + r.posterior->llt.matrixU().solve(z);
  }
  Eigen::VectorXd sample_prior(Stream& rng) const override { return rr_sample_knots(f_.current->knots, rng); }
  bool jittered() const override { return f_.current->knots.knot_factor.jittered; }

 private:
  RRGeometry geo_;
  Slots<RRFactors> f_;
};

class CARField final : public SpatialField {
 public:
  CARField(const Coords& s, double alpha, std::optional<double> cutoff)
      : base_(car_precision(car_weights(s, cutoff), 1.0, alpha)) {}

  std::size_t voxels() const override { return static_cast<std::size_t>(base_.unscaled.rows()); }
  std::size_t state_size() const override { return voxels(); }
  void prepare(const MaternParams& theta) override {
    if (!(theta.sigma2 > 0.0) || !std::isfinite(theta.sigma2)) throw InputError("CAR sigma2 must be positive");
    CARPrecision p = base_;
    p.sigma2 = theta.sigma2;
    f_.pending = std::move(p);
  }
  void commit() override { f_.commit(); }
  double log_prior(const Eigen::VectorXd& w, Slot s) const override { return car_logdensity(w, f_.at(s)); }
  Eigen::VectorXd field(const Eigen::VectorXd& w, Slot) const override { return w; }
  Eigen::VectorXd standardize(const Eigen::VectorXd& w, Slot s) const override {
    return w / std::sqrt(f_.at(s).sigma2);
  }
  Eigen::VectorXd unstandardize(const Eigen::VectorXd& u, Slot s) const override {
    return u * std::sqrt(f_.at(s).sigma2);
  }
  void gibbs(Eigen::VectorXd& w, const Eigen::VectorXd& resid, Stream& rng) const override {
    car_gibbs_sweep(*f_.current, w, resid, 1.0, rng);
  }
  Eigen::VectorXd sample_prior(Stream& rng) const override { return car_sample(*f_.current, rng); }
  bool jittered() const override { return false; }

 private:
  CARPrecision base_;
  Slots<CARPrecision> f_;
};

}  // namespace

std::unique_ptr<SpatialField> make_spatial_field(const ModelSpec& spec, const Coords& s, const MaternParams& theta) {
  std::unique_ptr<SpatialField> out;
  switch (spatial_kind(spec.variant)) {
    case SpatialKind::NNGP:
      if (s.size() < 2) throw InputError("NNGP needs at least two voxels");
      out = std::make_unique<NNGPField>(s, spec.m);
      break;
    case SpatialKind::RR: out = std::make_unique<RRField>(s, spec.a); break;
    case SpatialKind::CAR: out = std::make_unique<CARField>(s, spec.alpha_car, spec.car_cutoff); break;
    case SpatialKind::Dense: out = std::make_unique<DenseField>(s, spec.dense_limit); break;
    case SpatialKind::None: throw ConfigError("variant " + variant_name(spec.variant) + " has no spatial field");
  }
  out->reset(theta);
  return out;
}

}  // namespace spvc
