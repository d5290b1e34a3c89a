#include "spvc/linalg.hpp"

#include <cmath>
#include <sstream>

#include "spvc/errors.hpp"

namespace spvc {

double SpdFactor::log_det() const {
  const auto& l = llt.matrixLLT();
  double s = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

Eigen::MatrixXd SpdFactor::inverse() const {
  const Eigen::Index n = llt.matrixLLT().rows();
  return llt.solve(Eigen::MatrixXd::Identity(n, n));
}

SpdFactor factor_spd(const Eigen::MatrixXd& a, double jitter_scale) {
  SpdFactor f;
  f.llt.compute(a);
  if (f.llt.info() == Eigen::Success) return f;
  Eigen::MatrixXd b = a;
  b.diagonal().array() += kJitter * jitter_scale;
  f.llt.compute(b);
  f.jittered = true;
  if (f.llt.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "matrix of size " << a.rows() << " is not positive definite after jitter "
        << kJitter * jitter_scale;
    throw NumericalError(msg.str());
  }
  return f;
}

double mvn_logdensity(const Eigen::VectorXd& x, const SpdFactor& cov) {
  Eigen::VectorXd z = cov.llt.matrixL().solve(x);
  return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + cov.log_det() + z.squaredNorm());
}

}  // namespace spvc
