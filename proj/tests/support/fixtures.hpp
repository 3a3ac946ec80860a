#pragma once

#include <memory>
#include <random>
#include <string>

#include <Eigen/Core>

#include "mdagar/graph.hpp"
#include "mdagar/model.hpp"

namespace fixture {

// q diseases, intercept plus (p-1) N(0,1) covariates, outcomes N(0,1).
inline std::shared_ptr<const mdagar::Dataset> random_dataset(const mdagar::ArealGraph& g, std::size_t q,
                                                             std::size_t p, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  auto d = std::make_shared<mdagar::Dataset>();
  const auto k = static_cast<Eigen::Index>(g.size());
  d->region_labels = g.labels();
  for (std::size_t i = 0; i < q; ++i) {
    d->disease_labels.push_back("d" + std::to_string(i + 1));
    Eigen::MatrixXd x(k, static_cast<Eigen::Index>(p));
    Eigen::VectorXd y(k);
    for (Eigen::Index j = 0; j < k; ++j) {
      x(j, 0) = 1.0;
      for (Eigen::Index c = 1; c < x.cols(); ++c) x(j, c) = z(rng);
      y[j] = z(rng);
    }
    d->X.push_back(x);
    d->y.push_back(y);
  }
  d->validate();
  return d;
}

// A state with every field filled with moderate random values.
inline mdagar::ParamState random_state(const mdagar::Dataset& d, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.1, 0.9);
  const std::size_t q = d.q();
  mdagar::ParamState s;
  s.sigma2.resize(static_cast<Eigen::Index>(q));
  s.tau.resize(static_cast<Eigen::Index>(q));
  s.rho.resize(static_cast<Eigen::Index>(q));
  for (std::size_t i = 0; i < q; ++i) {
    Eigen::VectorXd b(d.X[i].cols());
    for (Eigen::Index c = 0; c < b.size(); ++c) b[c] = z(rng);
    s.beta.push_back(b);
    s.sigma2[static_cast<Eigen::Index>(i)] = 0.3 + u(rng);
    s.tau[static_cast<Eigen::Index>(i)] = 0.5 + u(rng);
    s.rho[static_cast<Eigen::Index>(i)] = u(rng);
  }
  s.eta = mdagar::InteractionCoeffs(q);
  for (std::size_t i = 1; i < q; ++i)
    for (std::size_t ip = 0; ip < i; ++ip) s.eta.set(i, ip, 0.5 * z(rng), 0.3 * z(rng));
  s.w.resize(static_cast<Eigen::Index>(q * d.k()));
  for (Eigen::Index j = 0; j < s.w.size(); ++j) s.w[j] = z(rng);
  return s;
}

}  // namespace fixture
