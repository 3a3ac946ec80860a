#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "mdagar/model.hpp"
#include "mdagar/random.hpp"

namespace mdagar {

struct ChainConfig {
  std::size_t n_iter = 6000;
  std::size_t n_burnin = 2000;
  std::size_t thin = 1;
  std::uint64_t seed = 1;
  /// Initial random-walk scale for each gamma_i = logit(rho_i). Empty means
  /// 1.0 for every disease; a single value is broadcast.
  std::vector<double> rw_step;
  double adapt_target = 0.35;
  std::size_t adapt_window = 100;

  void validate() const;
  std::vector<double> initial_steps(std::size_t q) const;
  std::size_t retained() const { return (n_iter - n_burnin) / thin; }
};

struct GaussianParams {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

struct ShapeRate {
  double shape = 0.0;
  double rate = 0.0;
};

/// Canonical form N(P^{-1} b, P^{-1}).
struct CanonicalParams {
  Eigen::MatrixXd precision;
  Eigen::VectorXd linear;
};

// Full conditionals. Disease index i is a hierarchy position.

/// beta_i | y_i, w_i, sigma_i^2 ~ N(M m, M) with
/// M = (X^T X / sigma^2 + I / var_beta)^{-1}, m = X^T (y - w) / sigma^2 + mu_beta / var_beta.
GaussianParams beta_conditional(const ParamState& s, const ModelSpec& spec, std::size_t i);
/// sigma_i^2 | ... ~ InvGamma(a + k/2, b + |y_i - X_i beta_i - w_i|^2 / 2).
ShapeRate sigma2_conditional(const ParamState& s, const ModelSpec& spec, std::size_t i);
/// w_i | ... in canonical form:
///   P = tau_i Q_i + sum_{n>i} tau_n A_ni^T Q_n A_ni + I / sigma_i^2
///   b = tau_i Q_i sum_{n<i} A_in w_n
///     + sum_{n>i} tau_n A_ni^T Q_n (w_n - sum_{i'<n, i'!=i} A_ni' w_i')
///     + (y_i - X_i beta_i) / sigma_i^2
CanonicalParams w_conditional(const ParamState& s, const ModelSpec& spec, std::size_t i);
/// tau_i | ... ~ Gamma(a + k/2, b + r_i^T Q_i r_i / 2), r_i = w_i - sum A_ii' w_i'.
ShapeRate tau_conditional(const ParamState& s, const ModelSpec& spec, std::size_t i);
/// delta_i = (Z_0, ..., Z_{i-1}), Z_n = (w_n, zeta_n), zeta_n[j] = sum_{j'~j} w_{n j'}.
/// Result is k x 2i; A_in w_n = Z_n (eta0_in, eta1_in)^T.
Eigen::MatrixXd build_delta(const ArealGraph& graph, const Eigen::VectorXd& w, std::size_t i);
/// eta_i | ... ~ N(H h, H), H = (tau_i delta^T Q_i delta + V^{-1})^{-1},
/// h = tau_i delta^T Q_i w_i + V^{-1} mu.
GaussianParams eta_conditional(const ParamState& s, const ModelSpec& spec, std::size_t i);

/// Terms of log N(w | 0, Q_w^{-1}(rho)) + sum log[rho (1 - rho)] that depend on
/// gamma_i, evaluated at rho_i = logistic(gamma_i).
double gamma_log_target(const ParamState& s, const ModelSpec& spec, std::size_t i,
                        double gamma);
/// Full log target over every gamma: log N(w | 0, Q_w^{-1}(rho(gamma))) + sum_i log[rho_i (1 - rho_i)].
double gamma_log_target_full(const ParamState& s, const ModelSpec& spec,
                             const Eigen::VectorXd& gamma);

void update_beta(ParamState& s, const ModelSpec& spec, Rng& rng);
void update_sigma2(ParamState& s, const ModelSpec& spec, Rng& rng);
/// Sequential over i = 0..q-1, each using the freshest w.
void update_w(ParamState& s, const ModelSpec& spec, Rng& rng);
void update_tau(ParamState& s, const ModelSpec& spec, Rng& rng);
void update_eta(ParamState& s, const ModelSpec& spec, Rng& rng);
/// One scalar random-walk Metropolis step per gamma_i with scale steps[i].
/// Returns per-disease accept flags. A zero step always accepts.
std::vector<char> update_gamma(ParamState& s, const ModelSpec& spec,
                               std::span<const double> steps, Rng& rng);

/// beta = posterior mean given w = 0 at the initial sigma^2, w = 0, tau and
/// sigma^2 at their prior means, rho = 0.5, eta = 0.
ParamState initial_state(const ModelSpec& spec);

/// Fixed-scan sweep: beta, sigma^2, w, tau, eta, gamma.
std::vector<char> gibbs_sweep(ParamState& s, const ModelSpec& spec,
                              std::span<const double> steps, Rng& rng);

/// Maps a ParamState to a flat row and names columns by ORIGINAL disease
/// index (1-based): beta[d][p], sigma2[d], tau[d], rho[d], eta0[d][d'],
/// eta1[d][d'], w[d][j], then lp. eta{0,1}[d][d'] links disease d to the
/// earlier-modeled disease d'.
class ParameterLayout {
 public:
  ParameterLayout() = default;
  ParameterLayout(const ModelSpec& spec);

  std::size_t q() const noexcept { return q_; }
  std::size_t k() const noexcept { return k_; }
  std::size_t columns() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t index(std::string_view name) const;

  void pack(const ParamState& s, double lp, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) const;
  ParamState unpack(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;

  std::size_t beta_column(std::size_t pos, std::size_t c) const { return beta_[pos] + c; }
  std::size_t sigma2_column(std::size_t pos) const { return sigma2_[pos]; }
  std::size_t tau_column(std::size_t pos) const { return tau_[pos]; }
  std::size_t rho_column(std::size_t pos) const { return rho_[pos]; }
  std::size_t eta0_column(std::size_t i, std::size_t ip) const;
  std::size_t w_column(std::size_t pos, std::size_t j) const { return w_[pos] + j; }
  std::size_t lp_column() const noexcept { return names_.size() - 1; }
  std::size_t p(std::size_t pos) const { return p_[pos]; }
  const std::vector<std::size_t>& ordering() const noexcept { return ordering_; }

 private:
  std::size_t q_ = 0;
  std::size_t k_ = 0;
  std::vector<std::size_t> ordering_;
  std::vector<std::size_t> p_;
  std::vector<std::size_t> beta_, sigma2_, tau_, rho_, w_;
  std::vector<std::size_t> eta_;  // eta0 column per pair slot; eta1 is +1
  std::vector<std::string> names_;
};

struct PosteriorSamples {
  ParameterLayout layout;
  /// Retained draws, one row per draw; last column is the log kernel.
  Eigen::MatrixXd draws;
  /// Post-adaptation acceptance rate of each gamma_i (hierarchy position).
  std::vector<double> acceptance;
  /// Random-walk scales after burn-in adaptation (hierarchy position).
  std::vector<double> final_step;
  /// log_posterior_kernel after every iteration, burn-in included.
  std::vector<double> lp_trace;

  std::size_t size() const noexcept { return static_cast<std::size_t>(draws.rows()); }
  ParamState state(std::size_t r) const { return layout.unpack(draws.row(static_cast<Eigen::Index>(r))); }
  Eigen::VectorXd column(std::string_view name) const {
    return draws.col(static_cast<Eigen::Index>(layout.index(name)));
  }
};

/// Runs one chain. Step sizes adapt only during burn-in (Robbins-Monro on
/// the log scale per window) and are frozen afterwards. Deterministic given
/// cfg.seed. Numerical failures are rethrown with the iteration attached.
PosteriorSamples run_chain(const ModelSpec& spec, const ChainConfig& cfg);

void write_samples_csv(std::ostream& out, const PosteriorSamples& samples);

}  // namespace mdagar
