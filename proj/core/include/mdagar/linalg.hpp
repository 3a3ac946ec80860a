#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string_view>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "mdagar/random.hpp"

namespace mdagar {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

/// Dense LLT of a symmetric matrix. On failure adds 1e-10 times the mean
/// diagonal and retries once; a second failure throws NumericalError naming
/// `what`.
Eigen::LLT<Eigen::MatrixXd> cholesky_with_jitter(const Eigen::MatrixXd& a,
                                                 std::string_view what);

/// Mean and one draw of N(P^{-1} b, P^{-1}) from its canonical form.
struct CanonicalGaussianDraw {
  Eigen::VectorXd mean;
  Eigen::VectorXd draw;
};

CanonicalGaussianDraw draw_canonical_gaussian(const Eigen::MatrixXd& precision,
                                              const Eigen::VectorXd& linear,
                                              Rng& rng, std::string_view what);

/// Draw from N(mean, cov).
Eigen::VectorXd draw_gaussian(const Eigen::VectorXd& mean,
                              const Eigen::MatrixXd& cov, Rng& rng,
                              std::string_view what);

/// Sum of log of the diagonal of a Cholesky factor, times two.
double log_det_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt);

double log_sum_exp(std::span<const double> values);
double log_mean_exp(std::span<const double> values);

inline double log_add_exp(double a, double b) {
  if (a == -INFINITY) return b;
  if (b == -INFINITY) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

inline double logistic(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                : std::exp(x) / (1.0 + std::exp(x));
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

/// log N(x | mean, variance).
inline double normal_log_density(double x, double mean, double variance) {
  const double r = x - mean;
  return -0.5 * (kLog2Pi + std::log(variance) + r * r / variance);
}

/// log density of Gamma(shape, rate) at x > 0.
double gamma_log_density(double x, double shape, double rate);

/// log density of Inverse-Gamma(shape, rate) at x > 0.
double inverse_gamma_log_density(double x, double shape, double rate);

/// log N(x | mean, cov) through a precomputed LLT of cov.
double mvn_log_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                       const Eigen::LLT<Eigen::MatrixXd>& cov_llt);

}  // namespace mdagar
