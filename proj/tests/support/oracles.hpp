#pragma once

// Straight-line reference implementations used to check the library. Nothing
// here calls into mdagar numerics except graph construction.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "mdagar/graph.hpp"

namespace oracle {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

inline std::shared_ptr<const mdagar::ArealGraph> graph_from_edges(std::size_t k,
                                                                  std::vector<std::pair<std::size_t, std::size_t>> e) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < k; ++i) labels.push_back("v" + std::to_string(i + 1));
  std::vector<mdagar::Edge> edges;
  for (auto [a, b] : e) edges.push_back({std::min(a, b), std::max(a, b)});
  return std::make_shared<const mdagar::ArealGraph>(labels, edges);
}

inline std::shared_ptr<const mdagar::ArealGraph> path_graph(std::size_t k) {
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (std::size_t i = 0; i + 1 < k; ++i) e.emplace_back(i, i + 1);
  return graph_from_edges(k, e);
}

// Erdos-Renyi graph; a random spanning path is added when `connected`.
inline std::shared_ptr<const mdagar::ArealGraph> random_graph(std::mt19937_64& rng, std::size_t k, double p,
                                                              bool connected = false) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<bool>> adj(k, std::vector<bool>(k, false));
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a + 1; b < k; ++b)
      if (u(rng) < p) adj[a][b] = true;
  if (connected && k > 1) {
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i + 1 < k; ++i) {
      auto a = std::min(perm[i], perm[i + 1]), b = std::max(perm[i], perm[i + 1]);
      adj[a][b] = true;
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a + 1; b < k; ++b)
      if (adj[a][b]) e.emplace_back(a, b);
  return graph_from_edges(k, e);
}

inline Eigen::MatrixXd adjacency(const mdagar::ArealGraph& g) {
  const auto k = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k, k);
  for (const auto& e : g.edges()) {
    m(static_cast<Eigen::Index>(e.first), static_cast<Eigen::Index>(e.second)) = 1.0;
    m(static_cast<Eigen::Index>(e.second), static_cast<Eigen::Index>(e.first)) = 1.0;
  }
  return m;
}

// Q = (I - B)^T F (I - B) assembled entry by entry from the definitions.
inline Eigen::MatrixXd dagar_q(const mdagar::ArealGraph& g, double rho) {
  const Eigen::MatrixXd m = adjacency(g);
  const Eigen::Index k = m.rows();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd f(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    double n = 0;
    for (Eigen::Index jp = 0; jp < j; ++jp) n += m(j, jp);
    const double denom = 1.0 + (n - 1.0) * rho * rho;
    f[j] = denom / (1.0 - rho * rho);
    for (Eigen::Index jp = 0; jp < j; ++jp)
      if (m(j, jp) != 0.0) b(j, jp) = rho / denom;
  }
  const Eigen::MatrixXd l = Eigen::MatrixXd::Identity(k, k) - b;
  return l.transpose() * f.asDiagonal() * l;
}

struct Eta {
  std::vector<std::vector<double>> e0, e1;  // [i][ip], ip < i
  explicit Eta(std::size_t q) : e0(q, std::vector<double>(q, 0.0)), e1(q, std::vector<double>(q, 0.0)) {}
};

// Q_w = (I - A)^T Lambda (I - A) from dense blocks.
inline Eigen::MatrixXd joint_q(const mdagar::ArealGraph& g, const std::vector<double>& tau,
                               const std::vector<double>& rho, const Eta& eta) {
  const std::size_t q = tau.size();
  const Eigen::MatrixXd m = adjacency(g);
  const Eigen::Index k = m.rows(), n = static_cast<Eigen::Index>(q) * k;
  Eigen::MatrixXd ia = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd lam = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < q; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    lam.block(ii * k, ii * k, k, k) = tau[i] * dagar_q(g, rho[i]);
    for (std::size_t ip = 0; ip < i; ++ip) {
      const auto jj = static_cast<Eigen::Index>(ip);
      ia.block(ii * k, jj * k, k, k) = -(eta.e0[i][ip] * Eigen::MatrixXd::Identity(k, k) + eta.e1[i][ip] * m);
    }
  }
  return ia.transpose() * lam * ia;
}

// Bivariate block formula written out by hand.
inline Eigen::MatrixXd bivariate_q(const mdagar::ArealGraph& g, double t1, double t2, double r1, double r2,
                                   double e0, double e1) {
  const Eigen::MatrixXd m = adjacency(g);
  const Eigen::Index k = m.rows();
  const Eigen::MatrixXd a = e0 * Eigen::MatrixXd::Identity(k, k) + e1 * m;
  const Eigen::MatrixXd q1 = dagar_q(g, r1), q2 = dagar_q(g, r2);
  Eigen::MatrixXd out(2 * k, 2 * k);
  out.topLeftCorner(k, k) = t1 * q1 + t2 * a.transpose() * q2 * a;
  out.topRightCorner(k, k) = -t2 * a.transpose() * q2;
  out.bottomLeftCorner(k, k) = -t2 * q2 * a;
  out.bottomRightCorner(k, k) = t2 * q2;
  return out;
}

inline double dense_log_det(const Eigen::MatrixXd& a) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  double s = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) s += std::log(llt.matrixL()(i, i));
  return 2 * s;
}

inline double min_eigenvalue(const Eigen::MatrixXd& a) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues().minCoeff();
}

// log N(x | mu, cov) by explicit inverse and determinant.
inline double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mu, const Eigen::MatrixXd& cov) {
  const Eigen::VectorXd r = x - mu;
  const double quad = r.dot(cov.inverse() * r);
  return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + std::log(cov.determinant()) + quad);
}

// Sample moments with standard errors for the mean and the variance.
struct Moments {
  double mean = 0, var = 0, se_mean = 0, se_var = 0;
};

inline Moments moments(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  Moments m;
  for (double v : x) m.mean += v;
  m.mean /= n;
  double m2 = 0, m4 = 0;
  for (double v : x) {
    const double d = (v - m.mean) * (v - m.mean);
    m2 += d;
    m4 += d * d;
  }
  m.var = m2 / (n - 1);
  m.se_mean = std::sqrt(m.var / n);
  const double mu2 = m2 / n, mu4 = m4 / n;
  m.se_var = std::sqrt(std::max(mu4 - mu2 * mu2, 0.0) / n);
  return m;
}

// Batch-means standard error of the mean for an autocorrelated series.
inline double batch_means_se(const std::vector<double>& x, std::size_t batches = 50) {
  const std::size_t len = x.size() / batches;
  std::vector<double> means;
  for (std::size_t b = 0; b < batches; ++b) {
    double s = 0;
    for (std::size_t i = b * len; i < (b + 1) * len; ++i) s += x[i];
    means.push_back(s / static_cast<double>(len));
  }
  const auto m = moments(means);
  return std::sqrt(m.var / static_cast<double>(batches));
}

inline bool within(double value, double target, double se, double z = 3.0) {
  return std::abs(value - target) <= z * se;
}

}  // namespace oracle
