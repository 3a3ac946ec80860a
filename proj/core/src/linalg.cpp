#include "mdagar/linalg.hpp"

#include <algorithm>
#include <string>

#include "mdagar/errors.hpp"

namespace mdagar {

Eigen::LLT<Eigen::MatrixXd> cholesky_with_jitter(const Eigen::MatrixXd& a,
                                                 std::string_view what) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) return llt;
  const double jitter = 1e-10 * a.diagonal().mean();
  if (jitter > 0.0 && std::isfinite(jitter)) {
    Eigen::MatrixXd b = a;
    b.diagonal().array() += jitter;
    llt.compute(b);
    if (llt.info() == Eigen::Success) return llt;
  }
  throw NumericalError("Cholesky factorization failed for " + std::string(what) +
                       " (matrix not positive definite after jitter)");
}

CanonicalGaussianDraw draw_canonical_gaussian(const Eigen::MatrixXd& precision,
                                              const Eigen::VectorXd& linear,
                                              Rng& rng, std::string_view what) {
  const auto llt = cholesky_with_jitter(precision, what);
  CanonicalGaussianDraw out;
  out.mean = llt.solve(linear);
  // L L^T = P, so L^{-T} z has covariance P^{-1}.
  const Eigen::VectorXd z = standard_normal_vector(rng, precision.rows());
  out.draw = out.mean + llt.matrixU().solve(z);
  return out;
}

Eigen::VectorXd draw_gaussian(const Eigen::VectorXd& mean,
                              const Eigen::MatrixXd& cov, Rng& rng,
                              std::string_view what) {
  const auto llt = cholesky_with_jitter(cov, what);
  return mean + llt.matrixL() * standard_normal_vector(rng, mean.size());
}

double log_det_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -INFINITY;
  const double m = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

double log_mean_exp(std::span<const double> values) {
  return log_sum_exp(values) - std::log(static_cast<double>(values.size()));
}

double gamma_log_density(double x, double shape, double rate) {
  if (!(x > 0.0)) return -INFINITY;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) -
         rate * x;
}

double inverse_gamma_log_density(double x, double shape, double rate) {
  if (!(x > 0.0)) return -INFINITY;
  return shape * std::log(rate) - std::lgamma(shape) - (shape + 1.0) * std::log(x) -
         rate / x;
}

double mvn_log_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                       const Eigen::LLT<Eigen::MatrixXd>& cov_llt) {
  const Eigen::VectorXd r = x - mean;
  const Eigen::VectorXd u = cov_llt.matrixL().solve(r);
  return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + log_det_from_llt(cov_llt) +
                 u.squaredNorm());
}

}  // namespace mdagar
