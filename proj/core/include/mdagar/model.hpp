#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mdagar/graph.hpp"
#include "mdagar/joint.hpp"

namespace mdagar {

/// Outcomes and design matrices for q diseases over k regions. Region j of
/// every vector/matrix is graph region j.
struct Dataset {
  std::vector<std::string> disease_labels;
  std::vector<std::string> region_labels;
  /// Covariate names for each disease, excluding the intercept.
  std::vector<std::vector<std::string>> covariate_names;
  std::vector<Eigen::VectorXd> y;  // q vectors of length k
  std::vector<Eigen::MatrixXd> X;  // q matrices k x p_i, column 0 the intercept

  std::size_t q() const noexcept { return y.size(); }
  std::size_t k() const noexcept { return region_labels.size(); }
  std::size_t p(std::size_t i) const { return static_cast<std::size_t>(X[i].cols()); }

  /// Finite outcomes, consistent shapes, full column rank X_i.
  void validate() const;

  /// Dataset whose disease position p holds original disease order[p].
  Dataset reordered(const std::vector<std::size_t>& order) const;
};

/// Reads `region,disease,outcome,x1,...,xp`. Diseases are ordered by first
/// appearance; every region of `graph` must appear exactly once per
/// disease. With `intercept` a column of ones is prepended to each X_i.
/// Trailing covariate cells left empty on every row of a disease are
/// dropped for that disease; any other empty cell rejects the row.
Dataset load_dataset(const std::filesystem::path& path, const ArealGraph& graph,
                     bool intercept = true);
Dataset parse_dataset(std::istream& in, const ArealGraph& graph, bool intercept = true);
/// Inverse of parse_dataset; with `intercept` column 0 of each X_i is
/// assumed to be the intercept and is not written.
void write_dataset(std::ostream& out, const Dataset& data, bool intercept = true);

/// Hyperpriors. Every variance here is a variance, never a precision.
struct PriorSpec {
  double a_tau = 2.0;     // tau_i ~ Gamma(shape a_tau, rate b_tau)
  double b_tau = 8.0;
  double a_sigma = 2.0;   // sigma_i^2 ~ InvGamma(shape a_sigma, rate b_sigma)
  double b_sigma = 0.4;
  double mu_beta = 0.0;   // beta_i ~ N(mu_beta 1, var_beta I)
  double var_beta = 1000.0;
  double mu_eta = 0.0;    // each eta coefficient ~ N(mu_eta, var_eta)
  double var_eta = 100.0;
  // rho_i ~ Uniform(0, 1)

  void validate() const;

  /// Simulation-study preset: Gamma(2, 8) on tau, IG(2, 0.4) on sigma^2.
  static PriorSpec simulation();
  /// Data-analysis preset: Gamma(2, 0.1) on tau, IG(2, 1) on sigma^2.
  static PriorSpec data_analysis();
};

/// One MCMC state for a fixed ordering; every per-disease field is indexed
/// by hierarchy position.
struct ParamState {
  std::vector<Eigen::VectorXd> beta;
  Eigen::VectorXd sigma2;
  Eigen::VectorXd tau;
  Eigen::VectorXd rho;
  InteractionCoeffs eta;
  Eigen::VectorXd w;  // stacked q*k; empty when marginalized out

  std::size_t q() const noexcept { return static_cast<std::size_t>(tau.size()); }
  /// sigma2, tau > 0 and 0 < rho < 1, all finite.
  bool in_support() const;
};

/// Data, prior and a disease ordering. ordering[p] is the original disease
/// index (0-based) modeled at hierarchy position p.
class ModelSpec {
 public:
  ModelSpec(std::shared_ptr<const ArealGraph> graph, std::shared_ptr<const Dataset> data,
            PriorSpec prior, std::vector<std::size_t> ordering);

  const ArealGraph& graph() const noexcept { return *graph_; }
  const std::shared_ptr<const ArealGraph>& graph_ptr() const noexcept { return graph_; }
  const Dataset& original_data() const noexcept { return *data_; }
  /// Dataset permuted into hierarchy order.
  const Dataset& data() const noexcept { return ordered_; }
  const PriorSpec& prior() const noexcept { return prior_; }
  const std::vector<std::size_t>& ordering() const noexcept { return ordering_; }
  std::size_t q() const noexcept { return ordering_.size(); }
  std::size_t k() const noexcept { return graph_->size(); }

  JointPrecision joint(const ParamState& s) const;

 private:
  std::shared_ptr<const ArealGraph> graph_;
  std::shared_ptr<const Dataset> data_;
  PriorSpec prior_;
  std::vector<std::size_t> ordering_;
  Dataset ordered_;
};

/// Throws ValidationError unless `ordering` is a permutation of 0..q-1.
void check_permutation(const std::vector<std::size_t>& ordering, std::size_t q);

/// Entry (i, j) = log N(y_ij | x_ij^T beta_i + w_ij, sigma_i^2).
Eigen::MatrixXd pointwise_loglik(const ParamState& s, const Dataset& data);

/// log N(w | 0, Q_w^{-1}) in factored form.
double log_prior_w(const ParamState& s, const ModelSpec& spec);

/// log p(beta) + log p(sigma^2) + log p(tau) + log p(eta) + log p(rho);
/// -inf outside the support.
double log_prior_theta(const ParamState& s, const PriorSpec& prior);

/// Unnormalized log posterior: likelihood + log_prior_w + hyperpriors.
double log_posterior_kernel(const ParamState& s, const ModelSpec& spec);

/// log N(y | X beta, Q_w^{-1} + blockdiag(sigma_i^2 I_k)) with w integrated
/// out. Uses the identity
///   (Q^{-1} + S)^{-1} = S^{-1/2} (I + S^{1/2} Q S^{1/2})^{-1} S^{1/2} Q
/// so only the well-conditioned I + S^{1/2} Q S^{1/2} is factored. The
/// state's w is ignored.
double integrated_loglik(const ParamState& s, const ModelSpec& spec);

/// Stacked X_i beta_i.
Eigen::VectorXd linear_predictor(const ParamState& s, const Dataset& data);

}  // namespace mdagar
