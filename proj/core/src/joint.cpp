#include "mdagar/joint.hpp"

#include <cmath>
#include <string>

namespace mdagar {

InteractionCoeffs::InteractionCoeffs(std::size_t q)
    : q_(q), eta0_(q * (q > 0 ? q - 1 : 0) / 2, 0.0), eta1_(eta0_.size(), 0.0) {}

std::size_t InteractionCoeffs::slot(std::size_t i, std::size_t ip) const {
  if (i >= q_ || ip >= i) {
    throw ValidationError("interaction index (" + std::to_string(i) + "," +
                          std::to_string(ip) + ") requires i' < i < q");
  }
  return i * (i - 1) / 2 + ip;
}

void InteractionCoeffs::set(std::size_t i, std::size_t ip, double eta0, double eta1) {
  const auto s = slot(i, ip);
  eta0_[s] = eta0;
  eta1_[s] = eta1;
}

Eigen::VectorXd InteractionCoeffs::block(std::size_t i) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(2 * i));
  for (std::size_t ip = 0; ip < i; ++ip) {
    out[static_cast<Eigen::Index>(2 * ip)] = eta0(i, ip);
    out[static_cast<Eigen::Index>(2 * ip + 1)] = eta1(i, ip);
  }
  return out;
}

void InteractionCoeffs::set_block(std::size_t i, const Eigen::VectorXd& values) {
  if (static_cast<std::size_t>(values.size()) != 2 * i) {
    throw ValidationError("eta block " + std::to_string(i) + " must have length " +
                          std::to_string(2 * i));
  }
  for (std::size_t ip = 0; ip < i; ++ip) {
    set(i, ip, values[static_cast<Eigen::Index>(2 * ip)],
        values[static_cast<Eigen::Index>(2 * ip + 1)]);
  }
}

bool InteractionCoeffs::all_zero() const {
  for (std::size_t s = 0; s < eta0_.size(); ++s) {
    if (eta0_[s] != 0.0 || eta1_[s] != 0.0) return false;
  }
  return true;
}

Eigen::SparseMatrix<double> build_A_block(double eta0, double eta1,
                                          const Eigen::SparseMatrix<double>& adjacency) {
  Eigen::SparseMatrix<double> identity(adjacency.rows(), adjacency.cols());
  identity.setIdentity();
  Eigen::SparseMatrix<double> a = eta0 * identity + eta1 * adjacency;
  a.prune(0.0);
  return a;
}

JointPrecision::JointPrecision(std::shared_ptr<const ArealGraph> graph, Eigen::VectorXd tau,
                               const Eigen::VectorXd& rho, InteractionCoeffs coeffs)
    : graph_(std::move(graph)), tau_(std::move(tau)), coeffs_(std::move(coeffs)) {
  if (!graph_) throw ValidationError("joint precision needs a graph");
  const auto q = static_cast<std::size_t>(tau_.size());
  if (q == 0) throw ValidationError("joint precision needs at least one disease");
  if (static_cast<std::size_t>(rho.size()) != q || coeffs_.diseases() != q) {
    throw ValidationError("joint precision: tau, rho and interaction table disagree on q");
  }
  for (std::size_t i = 0; i < q; ++i) {
    if (!(tau_[static_cast<Eigen::Index>(i)] > 0.0) ||
        !std::isfinite(tau_[static_cast<Eigen::Index>(i)])) {
      throw ValidationError("joint precision: tau must be positive and finite");
    }
  }
  dagar_.reserve(q);
  for (std::size_t i = 0; i < q; ++i) {
    dagar_.emplace_back(graph_, rho[static_cast<Eigen::Index>(i)]);
  }
}

void JointPrecision::check_length(const Eigen::VectorXd& v) const {
  if (static_cast<std::size_t>(v.size()) != dim()) {
    throw ValidationError("joint precision: vector length " + std::to_string(v.size()) +
                          " does not match q*k = " + std::to_string(dim()));
  }
}

Eigen::VectorXd JointPrecision::apply_interaction(std::size_t i, std::size_t ip,
                                                  const Eigen::VectorXd& v) const {
  const double e0 = coeffs_.eta0(i, ip);
  const double e1 = coeffs_.eta1(i, ip);
  Eigen::VectorXd out = e0 * v;
  if (e1 != 0.0) {
    for (std::size_t j = 0; j < k(); ++j) {
      double s = 0.0;
      for (std::size_t n : graph_->neighbors(j)) s += v[static_cast<Eigen::Index>(n)];
      out[static_cast<Eigen::Index>(j)] += e1 * s;
    }
  }
  return out;
}

Eigen::VectorXd JointPrecision::residual(std::size_t i, const Eigen::VectorXd& w) const {
  check_length(w);
  Eigen::VectorXd r = block(w, i, k());
  for (std::size_t ip = 0; ip < i; ++ip) r -= apply_interaction(i, ip, block(w, ip, k()));
  return r;
}

Eigen::VectorXd JointPrecision::matvec(const Eigen::VectorXd& v) const {
  check_length(v);
  const auto kk = static_cast<Eigen::Index>(k());
  // t = Lambda (I - A) v
  Eigen::VectorXd t(v.size());
  for (std::size_t i = 0; i < q(); ++i) {
    t.segment(static_cast<Eigen::Index>(i) * kk, kk) = tau(i) * dagar_[i].matvec(residual(i, v));
  }
  // (I - A)^T t; A blocks are symmetric.
  Eigen::VectorXd out = t;
  for (std::size_t n = 1; n < q(); ++n) {
    const Eigen::VectorXd tn = block(t, n, k());
    for (std::size_t i = 0; i < n; ++i) {
      out.segment(static_cast<Eigen::Index>(i) * kk, kk) -= apply_interaction(n, i, tn);
    }
  }
  return out;
}

double JointPrecision::quad_form(const Eigen::VectorXd& w) const {
  double s = 0.0;
  for (std::size_t i = 0; i < q(); ++i) s += tau(i) * dagar_[i].quad_form(residual(i, w));
  return s;
}

double JointPrecision::log_det() const {
  double s = 0.0;
  for (std::size_t i = 0; i < q(); ++i) {
    s += static_cast<double>(k()) * std::log(tau(i)) + dagar_[i].log_det();
  }
  return s;
}

void JointPrecision::solve_unit_lower(Eigen::VectorXd& v) const {
  const auto kk = static_cast<Eigen::Index>(k());
  for (std::size_t i = 1; i < q(); ++i) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(kk);
    for (std::size_t ip = 0; ip < i; ++ip) acc += apply_interaction(i, ip, block(v, ip, k()));
    v.segment(static_cast<Eigen::Index>(i) * kk, kk) += acc;
  }
}

Eigen::VectorXd JointPrecision::sample(Rng& rng) const {
  const auto kk = static_cast<Eigen::Index>(k());
  Eigen::VectorXd w(static_cast<Eigen::Index>(dim()));
  for (std::size_t i = 0; i < q(); ++i) {
    const Eigen::VectorXd z = standard_normal_vector(rng, kk);
    w.segment(static_cast<Eigen::Index>(i) * kk, kk) =
        dagar_[i].solve_root(z) / std::sqrt(tau(i));
  }
  solve_unit_lower(w);
  return w;
}

Eigen::MatrixXd JointPrecision::dense(std::size_t cap) const {
  if (dim() > cap) {
    throw ValidationError("dense joint precision requested for q*k=" + std::to_string(dim()) +
                          " above cap " + std::to_string(cap));
  }
  const auto n = static_cast<Eigen::Index>(dim());
  Eigen::MatrixXd out(n, n);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    e[c] = 1.0;
    out.col(c) = matvec(e);
    e[c] = 0.0;
  }
  return 0.5 * (out + out.transpose());
}

Eigen::MatrixXd dagar_covariance_root(const DagarPrecision& p) {
  const auto k = static_cast<Eigen::Index>(p.size());
  Eigen::MatrixXd root(k, k);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    e[c] = 1.0;
    root.col(c) = p.solve_root(e);
    e[c] = 0.0;
  }
  return root;
}

Eigen::MatrixXd JointPrecision::covariance(std::size_t cap) const {
  if (dim() > cap) {
    throw ValidationError("dense joint covariance requested for q*k=" + std::to_string(dim()) +
                          " above cap " + std::to_string(cap));
  }
  const auto kk = static_cast<Eigen::Index>(k());
  const auto n = static_cast<Eigen::Index>(dim());
  // C = (I - A)^{-1} blockdiag(tau_i^{-1/2} R_i); Q_w^{-1} = C C^T.
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < q(); ++i) {
    const auto off = static_cast<Eigen::Index>(i) * kk;
    c.block(off, off, kk, kk) = dagar_covariance_root(dagar_[i]) / std::sqrt(tau(i));
  }
  for (Eigen::Index col = 0; col < n; ++col) {
    Eigen::VectorXd v = c.col(col);
    solve_unit_lower(v);
    c.col(col) = v;
  }
  Eigen::MatrixXd cov = c * c.transpose();
  return 0.5 * (cov + cov.transpose());
}

JointPrecision build_joint(std::shared_ptr<const ArealGraph> graph, const Eigen::VectorXd& tau,
                           const Eigen::VectorXd& rho, const InteractionCoeffs& coeffs) {
  return JointPrecision(std::move(graph), tau, rho, coeffs);
}

Eigen::MatrixXd bivariate_closed_form(const JointPrecision& p) {
  if (p.q() != 2) throw ValidationError("bivariate closed form requires q = 2");
  const auto k = static_cast<Eigen::Index>(p.k());
  const Eigen::MatrixXd q1 = p.dagar(0).dense(kJointDenseCap);
  const Eigen::MatrixXd q2 = p.dagar(1).dense(kJointDenseCap);
  const Eigen::MatrixXd a =
      Eigen::MatrixXd(build_A_block(p.coeffs().eta0(1, 0), p.coeffs().eta1(1, 0),
                                    adjacency_matrix(p.graph())));
  Eigen::MatrixXd out(2 * k, 2 * k);
  out.topLeftCorner(k, k) = p.tau(0) * q1 + p.tau(1) * a.transpose() * q2 * a;
  // (I - A)^T Lambda (I - A) puts -tau2 on the off-diagonal blocks
  out.topRightCorner(k, k) = -p.tau(1) * a.transpose() * q2;
  out.bottomLeftCorner(k, k) = -p.tau(1) * q2 * a;
  out.bottomRightCorner(k, k) = p.tau(1) * q2;
  return out;
}

CrossMoments cross_moments(const Eigen::MatrixXd& d1, const Eigen::MatrixXd& d2, double tau1,
                           double tau2, double eta0, double eta1, const ArealGraph& graph,
                           std::size_t j) {
  if (j >= graph.size()) throw ValidationError("cross moments: region index out of range");
  const auto jj = static_cast<Eigen::Index>(j);
  double neighbor_sum = 0.0;
  for (std::size_t n : graph.neighbors(j)) neighbor_sum += d1(jj, static_cast<Eigen::Index>(n));

  CrossMoments m;
  m.cov = (eta0 * d1(jj, jj) + eta1 * neighbor_sum) / tau1;
  m.var1 = d1(jj, jj) / tau1;
  double second = 0.0;
  for (std::size_t n : graph.neighbors(j)) {
    const auto nn = static_cast<Eigen::Index>(n);
    double inner = 0.0;
    for (std::size_t t : graph.neighbors(j)) inner += d1(static_cast<Eigen::Index>(t), nn);
    second += eta0 * d1(jj, nn) + eta1 * inner;
  }
  m.var2 = (eta0 * (eta0 * d1(jj, jj) + eta1 * neighbor_sum) + eta1 * second) / tau1 +
           d2(jj, jj) / tau2;
  m.corr = m.cov / std::sqrt(m.var1 * m.var2);
  return m;
}

CrossMoments within_region_cross_moments(const JointPrecision& p, std::size_t j) {
  if (p.q() != 2) throw ValidationError("within-region cross moments require q = 2");
  const Eigen::MatrixXd r1 = dagar_covariance_root(p.dagar(0));
  const Eigen::MatrixXd r2 = dagar_covariance_root(p.dagar(1));
  return cross_moments(r1 * r1.transpose(), r2 * r2.transpose(), p.tau(0), p.tau(1),
                       p.coeffs().eta0(1, 0), p.coeffs().eta1(1, 0), p.graph(), j);
}

}  // namespace mdagar
