#pragma once

// Independent reference computations used by the test suites and by
// `spvc validate`. Nothing here calls into the implementation path it checks.

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "spvc/data_model.hpp"

namespace spvc::oracle {

/// K_nu(x) from the integral representation
///   K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt
/// by the trapezoid rule (exponentially convergent for this integrand).
double bessel_k_quadrature(double nu, double x);

/// Matern correlation assembled from bessel_k_quadrature.
double matern_corr_quadrature(double dist, double phi, double nu);

double matern_half(double dist, double phi);        // nu = 0.5 closed form
double matern_three_halves(double dist, double phi);  // nu = 1.5 closed form

/// Nearest earlier neighbors by sorting every candidate (distance, index).
std::vector<std::vector<std::size_t>> brute_force_neighbors(const Coords& ordered, std::size_t m);

/// AUC as (concordant pairs + ties / 2) / (n1 * n0).
double auc_pair_count(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels);

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
struct KsResult {
  double statistic;
  double p_value;
};
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);
KsResult ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf);

/// Dense covariance sigma2 * rho(|s_j - s_k|) evaluated with the closed form
/// for nu in {0.5, 1.5} or quadrature otherwise.
Eigen::MatrixXd dense_cov(const Coords& s, double sigma2, double phi, double nu);

/// log N(x | 0, cov) through an eigen-decomposition.
double mvn_logdensity_eigen(const Eigen::VectorXd& x, const Eigen::MatrixXd& cov);

/// Empirical covariance of the rows of `draws`.
Eigen::MatrixXd empirical_cov(const Eigen::MatrixXd& draws);

/// Posterior P(c = 1 | y) under independent voxels: p f1 / (p f1 + (1-p) f0).
double bayes_rule(double prior, double log_f1, double log_f0);

/// Standard normal CDF.
double norm_cdf(double x);

/// log N(y | mean, cov) over the observed (non-NaN) entries of y.
double gaussian_logpdf_observed(const Eigen::VectorXd& y, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov);

/// Predictive P(c_j = 1 | y) for a small image by enumerating all 2^n label
/// configurations. The label prior E_w[prod_j Phi(+-(q0_j + w_j))] is
/// averaged over `draws` samples of w ~ N(0, cov).
std::vector<double> enumerate_label_posterior(const std::vector<double>& log_f1, const std::vector<double>& log_f0,
                                              const std::vector<double>& q0, const Eigen::MatrixXd& cov,
                                              std::size_t draws, std::uint64_t seed);

}  // namespace spvc::oracle
