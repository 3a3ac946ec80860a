#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "mdagar/gibbs.hpp"
#include "mdagar/model.hpp"
#include "mdagar/random.hpp"

namespace mdagar {

/// theta without w, mapped to R^d: beta (identity), log sigma^2, log tau,
/// eta (identity), logit rho. Blocks are laid out by hierarchy position:
/// beta_0..beta_{q-1}, log sigma^2, log tau, eta pairs (eta0, eta1) in
/// InteractionCoeffs slot order, logit rho.
struct UnconstrainedSample {
  Eigen::VectorXd values;
  /// log |d constrained / d unconstrained| at `values`.
  double log_jacobian = 0.0;
};

class ThetaTransform {
 public:
  ThetaTransform() = default;
  /// p[i] is the number of regression coefficients at position i.
  explicit ThetaTransform(std::vector<std::size_t> p);
  static ThetaTransform for_spec(const ModelSpec& spec);

  std::size_t q() const noexcept { return p_.size(); }
  std::size_t dim() const noexcept { return dim_; }

  UnconstrainedSample to_unconstrained(const ParamState& s) const;
  /// Inverse map; the returned state has an empty w.
  ParamState to_constrained(const Eigen::VectorXd& u) const;
  double log_jacobian(const Eigen::VectorXd& u) const;

 private:
  std::vector<std::size_t> p_;
  std::size_t n_beta_ = 0;
  std::size_t dim_ = 0;
};

/// Multivariate normal g(.) with a Cholesky factor of its covariance.
class GaussianProposal {
 public:
  GaussianProposal() = default;
  GaussianProposal(Eigen::VectorXd mean, const Eigen::MatrixXd& cov);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(mean_.size()); }
  const Eigen::VectorXd& mean() const noexcept { return mean_; }
  const Eigen::MatrixXd& cov() const noexcept { return cov_; }
  /// Lower-triangular L with L L^T = cov.
  Eigen::MatrixXd cholesky() const { return llt_.matrixL(); }

  double log_density(const Eigen::VectorXd& x) const;
  Eigen::VectorXd sample(Rng& rng) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

struct ProposalFit {
  GaussianProposal proposal;
  /// Rows not used for the moment fit; the N1 pool.
  Eigen::MatrixXd held_out;
  std::size_t n_fit = 0;
};

/// Moment-matches a Gaussian to the first floor(split * n) rows of `draws`
/// (covariance divisor n_fit - 1) and returns the remaining rows as the
/// held-out pool. Requires n >= 2 d + 2 and both pools of size >= 2.
/// A covariance that stays singular after jitter throws NumericalError.
ProposalFit fit_proposal(const Eigen::MatrixXd& draws, double split = 0.5);

struct BridgeEstimate {
  double log_ml = 0.0;
  std::size_t n_iterations = 0;
  bool converged = false;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  /// log_ml after each fixed-point step.
  std::vector<double> trace;
  /// Approximate standard error of log_ml (relative error of the evidence).
  double mc_se = 0.0;
};

using LogTarget = std::function<double(const Eigen::VectorXd&)>;

/// Optimal-bridge fixed point on log p(y). `log_target` is the log of the
/// unnormalized posterior in the proposal's coordinates (Jacobian included).
/// Draws n2 samples from `proposal` (n2 = 0 means n2 = held_out rows).
/// Stops when successive log estimates differ by less than `tol` or after
/// `max_iter` steps (converged = false). Non-finite ratios throw
/// NumericalError naming the pool.
BridgeEstimate bridge_sampling(const LogTarget& log_target, const Eigen::MatrixXd& held_out,
                               const GaussianProposal& proposal, std::size_t n2, double tol,
                               std::size_t max_iter, Rng& rng);

struct BridgeConfig {
  double split = 0.5;
  std::size_t n2 = 0;  // 0: same as the held-out pool
  double tol = 1e-10;
  std::size_t max_iter = 1000;
  std::uint64_t seed = 1;

  void validate() const;
};

/// log p(y | theta) with w integrated out + log p(theta) + log Jacobian.
double unconstrained_log_posterior(const ModelSpec& spec, const ThetaTransform& transform,
                                   const Eigen::VectorXd& u);

/// Unconstrained theta (no w) of every retained draw, one row per draw.
Eigen::MatrixXd unconstrained_draws(const PosteriorSamples& samples, const ThetaTransform& transform);

/// Log marginal likelihood of the ordering in `spec` from its chain.
BridgeEstimate bridge_estimate(const ModelSpec& spec, const PosteriorSamples& samples,
                               const BridgeConfig& cfg);

struct ModelPosterior {
  std::vector<double> log_ml;
  std::vector<double> prior;
  std::vector<double> posterior;
};

/// Softmax of log_ml + log prior by log-sum-exp. Empty `prior` means
/// uniform. A log_ml of -inf (failed model) gets probability zero.
ModelPosterior posterior_model_probs(std::span<const double> log_ml,
                                     std::span<const double> prior = {});

/// sum_t means[t] * probs[t].
Eigen::VectorXd bma_expectation(const std::vector<Eigen::VectorXd>& means,
                                std::span<const double> probs);

/// Posterior means of beta and w stacked in ORIGINAL disease order:
/// beta of disease 1, ..., beta of disease q, then w_1, ..., w_q.
Eigen::VectorXd aligned_posterior_mean(const PosteriorSamples& samples);

/// All q! orderings (0-based) in lexicographic order; q in [1, 6].
std::vector<std::vector<std::size_t>> enumerate_orderings(std::size_t q);

}  // namespace mdagar
