#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mdagar/gibbs.hpp"
#include "mdagar/model.hpp"
#include "mdagar/random.hpp"

namespace mdagar {

struct WaicResult {
  double waic = 0.0;
  double lpd_hat = 0.0;
  double p_waic = 0.0;
};

/// `loglik` is L draws x n points of log p(y_point | theta^(l)).
/// lpd_hat = sum log-mean-exp over draws; p_waic = sum of per-point sample
/// variances (divisor L - 1); waic = -2 (lpd_hat - p_waic).
WaicResult waic(const Eigen::MatrixXd& loglik);

struct DScoreResult {
  double d = 0.0;
  double g = 0.0;
  double p = 0.0;
};

/// `replicates` is L x n posterior predictive draws matched to the stacked
/// outcome vector y. G = sum (y - mean replicate)^2, P = sum of per-point
/// replicate variances (divisor L - 1), D = G + P.
DScoreResult d_score(const Eigen::VectorXd& y, const Eigen::MatrixXd& replicates);

struct AmseResult {
  double amse = 0.0;
  double mc_se = 0.0;
};

/// Mean squared error over every entry of every estimate against `truth`,
/// with SE = sqrt(sum (e^2 - amse)^2 / (M (M - 1))) over the M entries.
AmseResult amse(const Eigen::VectorXd& truth, const std::vector<Eigen::VectorXd>& estimates);
/// Same, with a separate truth per dataset.
AmseResult amse(const std::vector<Eigen::VectorXd>& truths,
                const std::vector<Eigen::VectorXd>& estimates);

/// KL( N(0, Q_true^{-1}) || N(0, Q_model^{-1}) )
///   = 1/2 [log det Q_true - log det Q_model + tr(Q_model Q_true^{-1}) - n].
double gaussian_kl(const Eigen::MatrixXd& q_true, const Eigen::MatrixXd& q_model);

/// Linear interpolation between order statistics (h = (n - 1) p).
double quantile(std::span<const double> values, double p);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  bool contains(double v) const noexcept { return lower <= v && v <= upper; }
};

/// Equal-tailed interval from the (1 - level)/2 and (1 + level)/2 quantiles.
Interval credible_interval(std::span<const double> draws, double level = 0.95);

/// Percentage of intervals containing `truth`.
double coverage(std::span<const Interval> intervals, double truth);

/// Split potential-scale-reduction factor over chains of equal length.
/// Each chain is halved; needs at least 4 draws per chain.
double split_rhat(const std::vector<Eigen::VectorXd>& chains);

/// L x qk matrix of pointwise log likelihoods for every retained draw,
/// columns in hierarchy order (disease block, then region).
Eigen::MatrixXd pointwise_loglik_draws(const PosteriorSamples& samples, const Dataset& data);

/// One replicate y_rep ~ N(X beta + w, sigma^2) per retained draw.
Eigen::MatrixXd replicate_draws(const PosteriorSamples& samples, const Dataset& data, Rng& rng);

/// Stacked outcomes in hierarchy order.
Eigen::VectorXd stacked_outcomes(const Dataset& data);

}  // namespace mdagar
