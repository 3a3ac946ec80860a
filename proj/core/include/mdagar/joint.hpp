#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "mdagar/dagar.hpp"
#include "mdagar/graph.hpp"
#include "mdagar/random.hpp"

namespace mdagar {

/// Dense materialization cap for joint objects (q * k).
inline constexpr std::size_t kJointDenseCap = 2048;

/// Lower-triangular table of interaction weights (eta0_{ii'}, eta1_{ii'})
/// for i' < i, 0-based disease positions in the hierarchy.
class InteractionCoeffs {
 public:
  InteractionCoeffs() = default;
  explicit InteractionCoeffs(std::size_t q);

  std::size_t diseases() const noexcept { return q_; }
  /// Number of (i, i') pairs, q(q-1)/2.
  std::size_t pairs() const noexcept { return eta0_.size(); }

  double eta0(std::size_t i, std::size_t ip) const { return eta0_[slot(i, ip)]; }
  double eta1(std::size_t i, std::size_t ip) const { return eta1_[slot(i, ip)]; }
  void set(std::size_t i, std::size_t ip, double eta0, double eta1);

  /// eta_i = (eta0_{i0}, eta1_{i0}, eta0_{i1}, eta1_{i1}, ...), length 2i.
  Eigen::VectorXd block(std::size_t i) const;
  void set_block(std::size_t i, const Eigen::VectorXd& values);

  bool all_zero() const;

 private:
  std::size_t slot(std::size_t i, std::size_t ip) const;

  std::size_t q_ = 0;
  std::vector<double> eta0_;
  std::vector<double> eta1_;
};

/// A_{ii'} = eta0 I + eta1 M as a sparse matrix.
Eigen::SparseMatrix<double> build_A_block(double eta0, double eta1,
                                          const Eigen::SparseMatrix<double>& adjacency);

/// Multivariate DAGAR precision Q_w = (I - A)^T Lambda (I - A) over q
/// diseases and k regions. Lambda = blockdiag(tau_i Q(rho_i)); A is strictly
/// block-lower-triangular with A_{ii'} = eta0_{ii'} I + eta1_{ii'} M. The
/// stacked vector layout is w = (w_1, ..., w_q), each block of length k.
class JointPrecision {
 public:
  JointPrecision(std::shared_ptr<const ArealGraph> graph, Eigen::VectorXd tau,
                 const Eigen::VectorXd& rho, InteractionCoeffs coeffs);

  std::size_t q() const noexcept { return dagar_.size(); }
  std::size_t k() const noexcept { return graph_->size(); }
  std::size_t dim() const noexcept { return q() * k(); }
  double tau(std::size_t i) const { return tau_[static_cast<Eigen::Index>(i)]; }
  const Eigen::VectorXd& taus() const noexcept { return tau_; }
  const DagarPrecision& dagar(std::size_t i) const { return dagar_[i]; }
  const InteractionCoeffs& coeffs() const noexcept { return coeffs_; }
  const ArealGraph& graph() const noexcept { return *graph_; }

  /// A_{ii'} v for a length-k vector v.
  Eigen::VectorXd apply_interaction(std::size_t i, std::size_t ip,
                                    const Eigen::VectorXd& v) const;
  /// w_i - sum_{i'<i} A_{ii'} w_{i'} for a stacked vector w.
  Eigen::VectorXd residual(std::size_t i, const Eigen::VectorXd& w) const;

  /// Q_w v, applied as (I - A)^T Lambda (I - A) v.
  Eigen::VectorXd matvec(const Eigen::VectorXd& v) const;
  /// w^T Q_w w = sum_i tau_i r_i^T Q(rho_i) r_i with r_i = residual(i, w).
  double quad_form(const Eigen::VectorXd& w) const;
  /// sum_i (k log tau_i + log det Q(rho_i)); det(I - A) = 1.
  double log_det() const;

  /// Exact draw from N(0, Q_w^{-1}): eps_i = tau_i^{-1/2} (F^{1/2}(I-B))^{-1} z_i,
  /// then (I - A) w = eps by forward block substitution.
  Eigen::VectorXd sample(Rng& rng) const;

  Eigen::MatrixXd dense(std::size_t cap = kJointDenseCap) const;
  /// Dense Q_w^{-1} through the triangular root, no SPD inverse.
  Eigen::MatrixXd covariance(std::size_t cap = kJointDenseCap) const;

  static Eigen::VectorXd block(const Eigen::VectorXd& w, std::size_t i, std::size_t k) {
    return w.segment(static_cast<Eigen::Index>(i * k), static_cast<Eigen::Index>(k));
  }

 private:
  /// Solves (I - A) w = eps in place.
  void solve_unit_lower(Eigen::VectorXd& v) const;
  void check_length(const Eigen::VectorXd& v) const;

  std::shared_ptr<const ArealGraph> graph_;
  Eigen::VectorXd tau_;
  std::vector<DagarPrecision> dagar_;
  InteractionCoeffs coeffs_;
};

JointPrecision build_joint(std::shared_ptr<const ArealGraph> graph, const Eigen::VectorXd& tau,
                           const Eigen::VectorXd& rho, const InteractionCoeffs& coeffs);

/// Block formula for q = 2:
///   [[tau1 Q1 + tau2 A^T Q2 A, -tau2 A^T Q2], [-tau2 Q2 A, tau2 Q2]].
Eigen::MatrixXd bivariate_closed_form(const JointPrecision& p);

struct CrossMoments {
  double cov = 0.0;
  double var1 = 0.0;
  double var2 = 0.0;
  double corr = 0.0;
};

/// Within-region covariance, variances and correlation of (w_1j, w_2j) for
/// a bivariate hierarchy with first-disease spatial covariance D1 / tau1
/// and second-disease conditional covariance D2 / tau2.
CrossMoments cross_moments(const Eigen::MatrixXd& d1, const Eigen::MatrixXd& d2,
                           double tau1, double tau2, double eta0, double eta1,
                           const ArealGraph& graph, std::size_t j);

/// cross_moments with D_i = Q(rho_i)^{-1} taken from the DAGAR factors.
CrossMoments within_region_cross_moments(const JointPrecision& p, std::size_t j);

/// Dense (F^{1/2}(I - B))^{-1}, a lower-triangular root with R R^T = Q^{-1}.
Eigen::MatrixXd dagar_covariance_root(const DagarPrecision& p);

}  // namespace mdagar
