#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mdagar/evidence.hpp"
#include "mdagar/gibbs.hpp"
#include "mdagar/graph.hpp"
#include "mdagar/joint.hpp"
#include "mdagar/model.hpp"

namespace mdagar {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// D_{jj'} = exp(-phi d(j, j')) with phi = -log(rho) and Euclidean d.
/// Throws ValidationError for rho outside (0, 1) or coincident points.
Eigen::MatrixXd exp_decay_covariance(std::span<const Point> coords, double rho);

/// Reads `label,x,y` and returns the points in graph region order. Every
/// graph region must appear exactly once.
std::vector<Point> load_coordinates(const std::filesystem::path& path, const ArealGraph& graph);
std::vector<Point> parse_coordinates(std::istream& in, const ArealGraph& graph);
void write_coordinates(std::ostream& out, const ArealGraph& graph, std::span<const Point> coords);

struct Geometry {
  std::shared_ptr<const ArealGraph> graph;
  std::vector<Point> coords;
};

/// 7 x 7 rook grid with the bottom-right cell removed (48 regions), unit
/// spacing, coordinates (column, row).
Geometry grid_minus_corner();

/// Dense multivariate truth whose i-th hierarchy block has spatial
/// covariance D_i / tau_i, coupled by A_{ii'} = eta0 I + eta1 M:
///   w_(1) = eps_(1),  w_(i) = sum_{i'<i} A_{ii'} w_(i') + eps_(i).
/// Exponential truth uses D_i = exp_decay_covariance(rho_i); DAGAR truth
/// uses D_i = Q(rho_i)^{-1}.
class DenseTruth {
 public:
  DenseTruth(std::shared_ptr<const ArealGraph> graph, std::vector<Eigen::MatrixXd> d,
             Eigen::VectorXd tau, InteractionCoeffs eta);

  std::size_t q() const noexcept { return d_.size(); }
  std::size_t k() const noexcept { return graph_->size(); }
  const ArealGraph& graph() const noexcept { return *graph_; }
  const Eigen::MatrixXd& spatial_covariance(std::size_t i) const { return d_[i]; }
  const Eigen::VectorXd& tau() const noexcept { return tau_; }
  const InteractionCoeffs& eta() const noexcept { return eta_; }

  /// Dense Q_w = (I - A)^T blockdiag(tau_i D_i^{-1}) (I - A).
  Eigen::MatrixXd precision() const;
  /// Dense Q_w^{-1} = (I - A)^{-1} blockdiag(D_i / tau_i) (I - A)^{-T}.
  Eigen::MatrixXd covariance() const;
  /// Exact draw, stacked by hierarchy position.
  Eigen::VectorXd sample(Rng& rng) const;
  /// corr(w_(i)j, w_(ip)j) for every region j, from covariance().
  Eigen::VectorXd within_region_correlation(std::size_t i, std::size_t ip) const;

 private:
  Eigen::MatrixXd unit_lower() const;  // I - A

  std::shared_ptr<const ArealGraph> graph_;
  std::vector<Eigen::MatrixXd> d_;
  std::vector<Eigen::MatrixXd> chol_;  // lower factors of D_i
  Eigen::VectorXd tau_;
  InteractionCoeffs eta_;
};

DenseTruth exponential_truth(const Geometry& geometry, const Eigen::VectorXd& tau,
                             const Eigen::VectorXd& rho, const InteractionCoeffs& eta);
DenseTruth dagar_truth(std::shared_ptr<const ArealGraph> graph, const Eigen::VectorXd& tau,
                       const Eigen::VectorXd& rho, const InteractionCoeffs& eta);

enum class TruthKind { kExponential, kDagar };

struct EtaRegime {
  std::string name;
  double eta0 = 0.0;
  double eta1 = 0.0;
};

/// LOW (0.05, 0.1), MEDIUM (0.5, 0.3), HIGH (2.5, 0.5).
std::vector<EtaRegime> standard_eta_regimes();

struct GeneratorConfig {
  Geometry geometry;
  TruthKind truth = TruthKind::kExponential;
  /// Indexed by ORIGINAL disease.
  std::vector<Eigen::VectorXd> beta;
  Eigen::VectorXd sigma2;
  /// Indexed by hierarchy position of `order`.
  Eigen::VectorXd tau;
  Eigen::VectorXd rho;
  InteractionCoeffs eta;
  /// order[p] = original disease at hierarchy position p.
  std::vector<std::size_t> order;
  std::size_t n_replicates = 1;
  std::uint64_t seed = 1;

  std::size_t q() const noexcept { return beta.size(); }
  void validate() const;
};

/// q = 2: beta_1 = (1, 5), beta_2 = (2, 4, 5), tau = 0.25, rho = (0.2, 0.8),
/// sigma^2 = 0.4, exponential truth, 85 replicates.
GeneratorConfig bivariate_config(const Geometry& geometry, const EtaRegime& regime);
/// q = 3 with beta_3 = (5, 3, 6), rho = (0.2, 0.8, 0.5) by position, eta by
/// position pair (0.5, 0.3), (1, 0.6), (1.5, 0.9), 50 replicates.
GeneratorConfig three_disease_config(const Geometry& geometry, std::vector<std::size_t> order);

struct SimReplicate {
  Dataset data;
  /// True latent effects stacked in ORIGINAL disease order.
  Eigen::VectorXd w;
};

struct Simulation {
  /// Covariates drawn once from N(0, I) and shared by every replicate.
  std::vector<Eigen::MatrixXd> X;
  std::vector<SimReplicate> replicates;
};

/// Column p of each X_i is a N(0, 1) covariate; there is no intercept.
std::vector<Eigen::MatrixXd> draw_covariates(const GeneratorConfig& cfg, Rng& rng);
DenseTruth build_truth(const GeneratorConfig& cfg);
/// Deterministic given cfg.seed. With `X` nonempty those covariates are
/// reused instead of drawn.
Simulation simulate(const GeneratorConfig& cfg, std::vector<Eigen::MatrixXd> X = {});

struct RecoveryConfig {
  std::size_t replicates = 10;
  ChainConfig chain;
  BridgeConfig bridge;
  PriorSpec prior = PriorSpec::simulation();
  std::size_t jobs = 1;
  std::uint64_t seed = 1;
};

struct RecoveryFailure {
  std::size_t true_model = 0;  // 0-based index into enumerate_orderings(3)
  std::size_t replicate = 0;
  std::size_t fitted_model = 0;
  std::string message;
};

struct RecoveryResult {
  std::vector<std::vector<std::size_t>> orderings;
  /// counts(t, m): replicates of true model t for which m had the largest
  /// posterior probability.
  Eigen::MatrixXi counts;
  /// counts divided by the replicates with a decision.
  Eigen::MatrixXd proportions;
  /// log_ml(t * R + r, m)
  Eigen::MatrixXd log_ml;
  std::vector<RecoveryFailure> failures;
};

/// Three-disease order recovery: for each true ordering simulate R
/// datasets (shared X), fit every ordering, bridge-estimate it and record
/// the argmax. Fit errors are recorded per replicate and excluded.
RecoveryResult run_order_recovery(const Geometry& geometry, const RecoveryConfig& cfg);

void write_recovery_table(std::ostream& out, const RecoveryResult& result);

/// "[1 3 2]" for the 0-based ordering {0, 2, 1}; no commas so it stays one CSV cell.
std::string format_ordering(const std::vector<std::size_t>& ordering);

}  // namespace mdagar
