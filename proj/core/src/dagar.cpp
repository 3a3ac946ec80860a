#include "mdagar/dagar.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace mdagar {

DagarPrecision::DagarPrecision(std::shared_ptr<const ArealGraph> graph, double rho)
    : graph_(std::move(graph)), rho_(rho) {
  if (!graph_) throw ValidationError("DAGAR precision needs a graph");
  if (!(rho > 0.0 && rho < 1.0)) {
    throw ValidationError("DAGAR rho must lie in the open interval (0, 1), got " +
                          std::to_string(rho));
  }
  const auto& dir = graph_->directed();
  const std::size_t k = graph_->size();
  b_.resize(static_cast<Eigen::Index>(k));
  lambda_.resize(static_cast<Eigen::Index>(k));
  const double rho2 = rho * rho;
  for (std::size_t j = 0; j < k; ++j) {
    const double n = static_cast<double>(dir.count(j));
    const double denom = 1.0 + (n - 1.0) * rho2;
    b_[j] = dir.count(j) == 0 ? 0.0 : rho / denom;
    lambda_[j] = denom / (1.0 - rho2);
  }
}

double DagarPrecision::coefficient(std::size_t j, std::size_t jp) const {
  const auto n = graph_->directed().of(j);
  return std::binary_search(n.begin(), n.end(), jp) ? b_[j] : 0.0;
}

void DagarPrecision::check_length(const Eigen::VectorXd& v) const {
  if (static_cast<std::size_t>(v.size()) != size()) {
    throw ValidationError("DAGAR: vector length " + std::to_string(v.size()) +
                          " does not match region count " + std::to_string(size()));
  }
}

Eigen::VectorXd DagarPrecision::apply_factor(const Eigen::VectorXd& v) const {
  check_length(v);
  const auto& dir = graph_->directed();
  Eigen::VectorXd out = v;
  for (std::size_t j = 0; j < size(); ++j) {
    double s = 0.0;
    for (std::size_t n : dir.of(j)) s += v[n];
    out[j] -= b_[j] * s;
  }
  return out;
}

Eigen::VectorXd DagarPrecision::apply_factor_transpose(const Eigen::VectorXd& v) const {
  check_length(v);
  const auto& dir = graph_->directed();
  Eigen::VectorXd out = v;
  for (std::size_t j = 0; j < size(); ++j) {
    const double t = b_[j] * v[j];
    for (std::size_t n : dir.of(j)) out[n] -= t;
  }
  return out;
}

Eigen::VectorXd DagarPrecision::matvec(const Eigen::VectorXd& v) const {
  Eigen::VectorXd u = apply_factor(v);
  u.array() *= lambda_.array();
  return apply_factor_transpose(u);
}

double DagarPrecision::log_det() const { return lambda_.array().log().sum(); }

double DagarPrecision::quad_form(const Eigen::VectorXd& w) const {
  const Eigen::VectorXd u = apply_factor(w);
  return (lambda_.array() * u.array().square()).sum();
}

Eigen::VectorXd DagarPrecision::solve_root(const Eigen::VectorXd& z) const {
  check_length(z);
  const auto& dir = graph_->directed();
  Eigen::VectorXd x(z.size());
  for (std::size_t j = 0; j < size(); ++j) {
    double s = 0.0;
    for (std::size_t n : dir.of(j)) s += x[n];
    x[j] = z[j] / std::sqrt(lambda_[j]) + b_[j] * s;
  }
  return x;
}

void DagarPrecision::add_congruence_to(Eigen::MatrixXd& out, double scale, double eta0,
                                       double eta1) const {
  const std::size_t k = size();
  if (static_cast<std::size_t>(out.rows()) != k || static_cast<std::size_t>(out.cols()) != k) {
    throw ValidationError("DAGAR: congruence target has wrong shape");
  }
  const auto& dir = graph_->directed();
  // Row j of (I - B) A, accumulated sparsely.
  std::vector<double> row(k, 0.0);
  std::vector<std::size_t> touched;
  std::vector<char> mark(k, 0);
  auto add = [&](std::size_t t, double v) {
    if (!mark[t]) {
      mark[t] = 1;
      touched.push_back(t);
    }
    row[t] += v;
  };
  auto add_a_row = [&](std::size_t s, double coef) {
    if (eta0 != 0.0) add(s, coef * eta0);
    if (eta1 != 0.0) {
      for (std::size_t u : graph_->neighbors(s)) add(u, coef * eta1);
    }
  };
  for (std::size_t j = 0; j < k; ++j) {
    touched.clear();
    add_a_row(j, 1.0);
    for (std::size_t n : dir.of(j)) add_a_row(n, -b_[j]);
    const double weight = scale * lambda_[j];
    for (std::size_t a : touched) {
      const double ra = weight * row[a];
      if (ra == 0.0) continue;
      for (std::size_t c : touched) out(a, c) += ra * row[c];
    }
    for (std::size_t t : touched) {
      row[t] = 0.0;
      mark[t] = 0;
    }
  }
}

Eigen::MatrixXd DagarPrecision::dense(std::size_t cap) const {
  if (size() > cap) {
    throw ValidationError("dense DAGAR precision requested for k=" + std::to_string(size()) +
                          " above cap " + std::to_string(cap));
  }
  const auto k = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(k, k);
  add_congruence_to(q, 1.0);
  return q;
}

DagarPrecision build_dagar(std::shared_ptr<const ArealGraph> graph, double rho) {
  return DagarPrecision(std::move(graph), rho);
}

}  // namespace mdagar
