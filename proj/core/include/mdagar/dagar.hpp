#pragma once

#include <cstddef>
#include <memory>

#include <Eigen/Core>

#include "mdagar/graph.hpp"

namespace mdagar {

/// Default ceiling on k for dense materialization of Q(rho).
inline constexpr std::size_t kDefaultDenseCap = 512;

/// Univariate DAGAR precision Q(rho) = (I - B)^T F (I - B).
///
/// Row j of B has the common value
///   b_j = rho / (1 + (n_{<j} - 1) rho^2)
/// on each earlier neighbor in N(j), and F = diag(lambda) with
///   lambda_j = (1 + (n_{<j} - 1) rho^2) / (1 - rho^2).
/// Storage is O(k); the neighbor structure is shared with the graph.
class DagarPrecision {
 public:
  /// Throws ValidationError unless 0 < rho < 1.
  DagarPrecision(std::shared_ptr<const ArealGraph> graph, double rho);

  double rho() const noexcept { return rho_; }
  std::size_t size() const noexcept { return lambda_.size(); }
  const ArealGraph& graph() const noexcept { return *graph_; }
  const std::shared_ptr<const ArealGraph>& graph_ptr() const noexcept { return graph_; }

  /// b_{jj'} for every j' in N(j); zero for j with empty N(j).
  double coefficient(std::size_t j) const { return b_[j]; }
  /// b_{jj'} for an arbitrary pair (zero off the neighbor structure).
  double coefficient(std::size_t j, std::size_t jp) const;
  double conditional_precision(std::size_t j) const { return lambda_[j]; }
  const Eigen::VectorXd& conditional_precisions() const noexcept { return lambda_; }

  /// (I - B) v
  Eigen::VectorXd apply_factor(const Eigen::VectorXd& v) const;
  /// (I - B)^T v
  Eigen::VectorXd apply_factor_transpose(const Eigen::VectorXd& v) const;
  /// Q v, applied factor-wise.
  Eigen::VectorXd matvec(const Eigen::VectorXd& v) const;
  /// sum_j log lambda_j
  double log_det() const;
  /// lambda_1 w_1^2 + sum_{j>=2} lambda_j (w_j - sum_{j' in N(j)} b_{jj'} w_{j'})^2
  double quad_form(const Eigen::VectorXd& w) const;
  /// Solves F^{1/2} (I - B) x = z by forward substitution. For z ~ N(0, I)
  /// the result is an exact draw from N(0, Q^{-1}).
  Eigen::VectorXd solve_root(const Eigen::VectorXd& z) const;

  /// out += scale * A^T Q A with A = eta0 I + eta1 M (M the adjacency
  /// matrix). With (eta0, eta1) = (1, 0) this adds scale * Q. Sparse row
  /// accumulation; out must be k x k.
  void add_congruence_to(Eigen::MatrixXd& out, double scale, double eta0 = 1.0,
                         double eta1 = 0.0) const;

  /// Dense Q; throws ValidationError when k exceeds `cap`.
  Eigen::MatrixXd dense(std::size_t cap = kDefaultDenseCap) const;

 private:
  void check_length(const Eigen::VectorXd& v) const;

  std::shared_ptr<const ArealGraph> graph_;
  double rho_;
  Eigen::VectorXd b_;
  Eigen::VectorXd lambda_;
};

DagarPrecision build_dagar(std::shared_ptr<const ArealGraph> graph, double rho);

}  // namespace mdagar
