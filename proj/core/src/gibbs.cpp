#include "mdagar/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include <Eigen/Cholesky>

#include "mdagar/csv.hpp"
#include "mdagar/errors.hpp"
#include "mdagar/linalg.hpp"

namespace mdagar {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

Eigen::VectorXd block_of(const Eigen::VectorXd& w, std::size_t i, std::size_t k) {
  return JointPrecision::block(w, i, k);
}

// sum_{j' ~ j} v_{j'} for every j.
Eigen::VectorXd neighbor_sum(const ArealGraph& g, const Eigen::VectorXd& v) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
  for (std::size_t j = 0; j < g.size(); ++j) {
    double acc = 0.0;
    for (std::size_t jp : g.neighbors(j)) acc += v[idx(jp)];
    out[idx(j)] = acc;
  }
  return out;
}

Eigen::VectorXd apply_A(const ArealGraph& g, double eta0, double eta1, const Eigen::VectorXd& v) {
  Eigen::VectorXd out = eta0 * v;
  if (eta1 != 0.0) out += eta1 * neighbor_sum(g, v);
  return out;
}

}  // namespace

// ---------------------------------------------------------------- config

void ChainConfig::validate() const {
  if (n_iter == 0) throw ValidationError("n_iter must be positive");
  if (n_burnin >= n_iter) throw ValidationError("n_burnin must be smaller than n_iter");
  if (thin == 0) throw ValidationError("thin must be positive");
  if (!(adapt_target > 0.1 && adapt_target < 0.6)) {
    throw ValidationError("adapt_target must lie in (0.1, 0.6)");
  }
  if (adapt_window == 0) throw ValidationError("adapt_window must be positive");
  for (double s : rw_step) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("rw_step entries must be finite and > 0");
  }
}

std::vector<double> ChainConfig::initial_steps(std::size_t q) const {
  if (rw_step.empty()) return std::vector<double>(q, 1.0);
  if (rw_step.size() == 1) return std::vector<double>(q, rw_step[0]);
  if (rw_step.size() != q) {
    throw ValidationError("rw_step has " + std::to_string(rw_step.size()) + " entries for " +
                          std::to_string(q) + " diseases");
  }
  return rw_step;
}

// ---------------------------------------------------------------- conditionals

GaussianParams beta_conditional(const ParamState& s, const ModelSpec& spec, std::size_t i) {
  const Dataset& data = spec.data();
  const PriorSpec& prior = spec.prior();
  const Eigen::MatrixXd& X = data.X[i];
  const double s2 = s.sigma2[idx(i)];
  const Eigen::VectorXd resid = data.y[i] - block_of(s.w, i, spec.k());

  Eigen::MatrixXd prec = X.transpose() * X / s2;
  prec.diagonal().array() += 1.0 / prior.var_beta;
  const Eigen::VectorXd m =
      X.transpose() * resid / s2 +
      Eigen::VectorXd::Constant(X.cols(), prior.mu_beta / prior.var_beta);
  const auto llt = cholesky_with_jitter(prec, "beta conditional");
  GaussianParams out;
  out.cov = llt.solve(Eigen::MatrixXd::Identity(X.cols(), X.cols()));
  out.mean = llt.solve(m);
  return out;
}

ShapeRate sigma2_conditional(const ParamState& s, const ModelSpec& spec, std::size_t i) {
  const Dataset& data = spec.data();
  const Eigen::VectorXd r = data.y[i] - data.X[i] * s.beta[i] - block_of(s.w, i, spec.k());
  return {spec.prior().a_sigma + 0.5 * static_cast<double>(spec.k()),
          spec.prior().b_sigma + 0.5 * r.squaredNorm()};
}

CanonicalParams w_conditional(const ParamState& s, const ModelSpec& spec, std::size_t i) {
  const std::size_t q = spec.q();
  const std::size_t k = spec.k();
  const ArealGraph& g = spec.graph();
  const JointPrecision joint = spec.joint(s);
  const Dataset& data = spec.data();
  const double s2 = s.sigma2[idx(i)];

  CanonicalParams out;
  out.precision = Eigen::MatrixXd::Zero(idx(k), idx(k));
  joint.dagar(i).add_congruence_to(out.precision, joint.tau(i));
  for (std::size_t n = i + 1; n < q; ++n) {
    joint.dagar(n).add_congruence_to(out.precision, joint.tau(n), s.eta.eta0(n, i),
                                     s.eta.eta1(n, i));
  }
  out.precision.diagonal().array() += 1.0 / s2;

  out.linear = (data.y[i] - data.X[i] * s.beta[i]) / s2;
  if (i > 0) {
    Eigen::VectorXd mean_part = Eigen::VectorXd::Zero(idx(k));
    for (std::size_t n = 0; n < i; ++n) {
      mean_part += apply_A(g, s.eta.eta0(i, n), s.eta.eta1(i, n), block_of(s.w, n, k));
    }
    out.linear += joint.tau(i) * joint.dagar(i).matvec(mean_part);
  }
  for (std::size_t n = i + 1; n < q; ++n) {
    Eigen::VectorXd e = block_of(s.w, n, k);
    for (std::size_t ip = 0; ip < n; ++ip) {
      if (ip == i) continue;
      e -= apply_A(g, s.eta.eta0(n, ip), s.eta.eta1(n, ip), block_of(s.w, ip, k));
    }
    // A_ni is symmetric, so A_ni^T Q_n e = A_ni (Q_n e).
    out.linear += joint.tau(n) *
                  apply_A(g, s.eta.eta0(n, i), s.eta.eta1(n, i), joint.dagar(n).matvec(e));
  }
  return out;
}

ShapeRate tau_conditional(const ParamState& s, const ModelSpec& spec, std::size_t i) {
  const JointPrecision joint = spec.joint(s);
  const Eigen::VectorXd r = joint.residual(i, s.w);
  return {spec.prior().a_tau + 0.5 * static_cast<double>(spec.k()),
          spec.prior().b_tau + 0.5 * joint.dagar(i).quad_form(r)};
}

Eigen::MatrixXd build_delta(const ArealGraph& graph, const Eigen::VectorXd& w, std::size_t i) {
  const std::size_t k = graph.size();
  Eigen::MatrixXd delta(idx(k), idx(2 * i));
  for (std::size_t n = 0; n < i; ++n) {
    const Eigen::VectorXd wn = block_of(w, n, k);
    delta.col(idx(2 * n)) = wn;
    delta.col(idx(2 * n + 1)) = neighbor_sum(graph, wn);
  }
  return delta;
}

GaussianParams eta_conditional(const ParamState& s, const ModelSpec& spec, std::size_t i) {
  if (i == 0) throw ValidationError("the first disease in the hierarchy has no eta");
  const std::size_t k = spec.k();
  const PriorSpec& prior = spec.prior();
  const DagarPrecision dagar(spec.graph_ptr(), s.rho[idx(i)]);
  const double tau = s.tau[idx(i)];
  const Eigen::MatrixXd delta = build_delta(spec.graph(), s.w, i);

  Eigen::MatrixXd q_delta(delta.rows(), delta.cols());
  for (Eigen::Index c = 0; c < delta.cols(); ++c) q_delta.col(c) = dagar.matvec(delta.col(c));

  const Eigen::Index m = delta.cols();
  Eigen::MatrixXd prec = tau * delta.transpose() * q_delta;
  prec = 0.5 * (prec + prec.transpose()).eval();
  prec.diagonal().array() += 1.0 / prior.var_eta;
  const Eigen::VectorXd h = tau * q_delta.transpose() * block_of(s.w, i, k) +
                            Eigen::VectorXd::Constant(m, prior.mu_eta / prior.var_eta);
  const auto llt = cholesky_with_jitter(prec, "eta conditional");
  GaussianParams out;
  out.cov = llt.solve(Eigen::MatrixXd::Identity(m, m));
  out.mean = llt.solve(h);
  return out;
}

double gamma_log_target(const ParamState& s, const ModelSpec& spec, std::size_t i,
                        double gamma) {
  const double rho = logistic(gamma);
  if (!(rho > 0.0 && rho < 1.0)) return -INFINITY;
  const JointPrecision joint = spec.joint(s);
  const Eigen::VectorXd r = joint.residual(i, s.w);
  const DagarPrecision dagar(spec.graph_ptr(), rho);
  return 0.5 * dagar.log_det() - 0.5 * s.tau[idx(i)] * dagar.quad_form(r) + std::log(rho) +
         std::log1p(-rho);
}

double gamma_log_target_full(const ParamState& s, const ModelSpec& spec,
                             const Eigen::VectorXd& gamma) {
  ParamState t = s;
  double jac = 0.0;
  for (Eigen::Index i = 0; i < gamma.size(); ++i) {
    const double rho = logistic(gamma[i]);
    if (!(rho > 0.0 && rho < 1.0)) return -INFINITY;
    t.rho[i] = rho;
    jac += std::log(rho) + std::log1p(-rho);
  }
  return log_prior_w(t, spec) + jac;
}

// ---------------------------------------------------------------- updates

void update_beta(ParamState& s, const ModelSpec& spec, Rng& rng) {
  for (std::size_t i = 0; i < spec.q(); ++i) {
    const GaussianParams c = beta_conditional(s, spec, i);
    s.beta[i] = draw_gaussian(c.mean, c.cov, rng, "beta conditional");
  }
}

void update_sigma2(ParamState& s, const ModelSpec& spec, Rng& rng) {
  for (std::size_t i = 0; i < spec.q(); ++i) {
    const ShapeRate c = sigma2_conditional(s, spec, i);
    s.sigma2[idx(i)] = inverse_gamma_draw(rng, c.shape, c.rate);
  }
}

void update_w(ParamState& s, const ModelSpec& spec, Rng& rng) {
  const std::size_t k = spec.k();
  for (std::size_t i = 0; i < spec.q(); ++i) {
    const CanonicalParams c = w_conditional(s, spec, i);
    const CanonicalGaussianDraw d =
        draw_canonical_gaussian(c.precision, c.linear, rng, "w conditional");
    s.w.segment(idx(i * k), idx(k)) = d.draw;
  }
}

void update_tau(ParamState& s, const ModelSpec& spec, Rng& rng) {
  for (std::size_t i = 0; i < spec.q(); ++i) {
    const ShapeRate c = tau_conditional(s, spec, i);
    s.tau[idx(i)] = gamma_draw(rng, c.shape, c.rate);
  }
}

void update_eta(ParamState& s, const ModelSpec& spec, Rng& rng) {
  for (std::size_t i = 1; i < spec.q(); ++i) {
    const GaussianParams c = eta_conditional(s, spec, i);
    s.eta.set_block(i, draw_gaussian(c.mean, c.cov, rng, "eta conditional"));
  }
}

std::vector<char> update_gamma(ParamState& s, const ModelSpec& spec,
                               std::span<const double> steps, Rng& rng) {
  const std::size_t q = spec.q();
  if (steps.size() != q) throw ValidationError("one random-walk step per disease is required");
  std::vector<char> accepted(q, 0);
  for (std::size_t i = 0; i < q; ++i) {
    if (steps[i] == 0.0) {
      accepted[i] = 1;
      continue;
    }
    const double cur = logit(s.rho[idx(i)]);
    const double prop = cur + steps[i] * standard_normal(rng);
    const double log_ratio = gamma_log_target(s, spec, i, prop) - gamma_log_target(s, spec, i, cur);
    const double rho_new = logistic(prop);
    if (rho_new > 0.0 && rho_new < 1.0 && std::log(uniform01(rng)) < log_ratio) {
      s.rho[idx(i)] = rho_new;
      accepted[i] = 1;
    }
  }
  return accepted;
}

ParamState initial_state(const ModelSpec& spec) {
  const std::size_t q = spec.q();
  const PriorSpec& prior = spec.prior();
  ParamState s;
  s.sigma2 = Eigen::VectorXd::Constant(idx(q), prior.b_sigma / std::max(prior.a_sigma - 1.0, 1.0));
  s.tau = Eigen::VectorXd::Constant(idx(q), prior.a_tau / prior.b_tau);
  s.rho = Eigen::VectorXd::Constant(idx(q), 0.5);
  s.eta = InteractionCoeffs(q);
  s.w = Eigen::VectorXd::Zero(idx(q * spec.k()));
  s.beta.resize(q);
  for (std::size_t i = 0; i < q; ++i) s.beta[i] = Eigen::VectorXd::Zero(idx(spec.data().p(i)));
  for (std::size_t i = 0; i < q; ++i) s.beta[i] = beta_conditional(s, spec, i).mean;
  return s;
}

std::vector<char> gibbs_sweep(ParamState& s, const ModelSpec& spec,
                              std::span<const double> steps, Rng& rng) {
  update_beta(s, spec, rng);
  update_sigma2(s, spec, rng);
  update_w(s, spec, rng);
  update_tau(s, spec, rng);
  update_eta(s, spec, rng);
  return update_gamma(s, spec, steps, rng);
}

// ---------------------------------------------------------------- layout

ParameterLayout::ParameterLayout(const ModelSpec& spec)
    : q_(spec.q()), k_(spec.k()), ordering_(spec.ordering()) {
  const Dataset& data = spec.data();
  p_.resize(q_);
  beta_.resize(q_);
  sigma2_.resize(q_);
  tau_.resize(q_);
  rho_.resize(q_);
  w_.resize(q_);
  for (std::size_t i = 0; i < q_; ++i) p_[i] = data.p(i);

  std::vector<std::size_t> position(q_);
  for (std::size_t pos = 0; pos < q_; ++pos) position[ordering_[pos]] = pos;
  auto tag = [&](std::size_t pos) { return std::to_string(ordering_[pos] + 1); };

  // Columns follow original disease order so layouts of different orderings line up.
  for (std::size_t d = 0; d < q_; ++d) {
    const std::size_t pos = position[d];
    beta_[pos] = names_.size();
    for (std::size_t c = 0; c < p_[pos]; ++c) {
      names_.push_back("beta[" + tag(pos) + "][" + std::to_string(c) + "]");
    }
  }
  for (std::size_t d = 0; d < q_; ++d) {
    sigma2_[position[d]] = names_.size();
    names_.push_back("sigma2[" + std::to_string(d + 1) + "]");
  }
  for (std::size_t d = 0; d < q_; ++d) {
    tau_[position[d]] = names_.size();
    names_.push_back("tau[" + std::to_string(d + 1) + "]");
  }
  for (std::size_t d = 0; d < q_; ++d) {
    rho_[position[d]] = names_.size();
    names_.push_back("rho[" + std::to_string(d + 1) + "]");
  }
  for (std::size_t i = 1; i < q_; ++i) {
    for (std::size_t ip = 0; ip < i; ++ip) {
      eta_.push_back(names_.size());
      const std::string pair = "[" + tag(i) + "][" + tag(ip) + "]";
      names_.push_back("eta0" + pair);
      names_.push_back("eta1" + pair);
    }
  }
  for (std::size_t d = 0; d < q_; ++d) {
    const std::size_t pos = position[d];
    w_[pos] = names_.size();
    for (std::size_t j = 0; j < k_; ++j) {
      names_.push_back("w[" + tag(pos) + "][" + std::to_string(j + 1) + "]");
    }
  }
  names_.push_back("lp");
}

std::size_t ParameterLayout::index(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw ValidationError("unknown parameter column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - names_.begin());
}

std::size_t ParameterLayout::eta0_column(std::size_t i, std::size_t ip) const {
  if (ip >= i || i >= q_) throw ValidationError("eta column requested for an invalid pair");
  return eta_[i * (i - 1) / 2 + ip];
}

void ParameterLayout::pack(const ParamState& s, double lp, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) const {
  if (static_cast<std::size_t>(row.size()) != columns()) {
    throw ValidationError("row width does not match the parameter layout");
  }
  for (std::size_t i = 0; i < q_; ++i) {
    for (std::size_t c = 0; c < p_[i]; ++c) row[idx(beta_[i] + c)] = s.beta[i][idx(c)];
    row[idx(sigma2_[i])] = s.sigma2[idx(i)];
    row[idx(tau_[i])] = s.tau[idx(i)];
    row[idx(rho_[i])] = s.rho[idx(i)];
    for (std::size_t j = 0; j < k_; ++j) {
      row[idx(w_[i] + j)] = s.w.size() > 0 ? s.w[idx(i * k_ + j)] : 0.0;
    }
  }
  for (std::size_t i = 1; i < q_; ++i) {
    for (std::size_t ip = 0; ip < i; ++ip) {
      const std::size_t col = eta0_column(i, ip);
      row[idx(col)] = s.eta.eta0(i, ip);
      row[idx(col + 1)] = s.eta.eta1(i, ip);
    }
  }
  row[idx(lp_column())] = lp;
}

ParamState ParameterLayout::unpack(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  if (static_cast<std::size_t>(row.size()) != columns()) {
    throw ValidationError("row width does not match the parameter layout");
  }
  ParamState s;
  s.beta.resize(q_);
  s.sigma2.resize(idx(q_));
  s.tau.resize(idx(q_));
  s.rho.resize(idx(q_));
  s.eta = InteractionCoeffs(q_);
  s.w.resize(idx(q_ * k_));
  for (std::size_t i = 0; i < q_; ++i) {
    s.beta[i].resize(idx(p_[i]));
    for (std::size_t c = 0; c < p_[i]; ++c) s.beta[i][idx(c)] = row[idx(beta_[i] + c)];
    s.sigma2[idx(i)] = row[idx(sigma2_[i])];
    s.tau[idx(i)] = row[idx(tau_[i])];
    s.rho[idx(i)] = row[idx(rho_[i])];
    for (std::size_t j = 0; j < k_; ++j) s.w[idx(i * k_ + j)] = row[idx(w_[i] + j)];
  }
  for (std::size_t i = 1; i < q_; ++i) {
    for (std::size_t ip = 0; ip < i; ++ip) {
      const std::size_t col = eta0_column(i, ip);
      s.eta.set(i, ip, row[idx(col)], row[idx(col + 1)]);
    }
  }
  return s;
}

// ---------------------------------------------------------------- chain

PosteriorSamples run_chain(const ModelSpec& spec, const ChainConfig& cfg) {
  cfg.validate();
  const std::size_t q = spec.q();
  std::vector<double> steps = cfg.initial_steps(q);

  PosteriorSamples out;
  out.layout = ParameterLayout(spec);
  out.draws.resize(idx(cfg.retained()), idx(out.layout.columns()));
  out.lp_trace.reserve(cfg.n_iter);

  Rng rng(cfg.seed);
  ParamState s = initial_state(spec);

  std::vector<std::size_t> window_accepts(q, 0);
  std::vector<std::size_t> kept_accepts(q, 0);
  std::size_t windows = 0;
  std::size_t row = 0;

  for (std::size_t it = 0; it < cfg.n_iter; ++it) {
    std::vector<char> acc;
    double lp = 0.0;
    try {
      acc = gibbs_sweep(s, spec, steps, rng);
      lp = log_posterior_kernel(s, spec);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " at iteration " + std::to_string(it + 1));
    }
    if (!std::isfinite(lp)) {
      throw NumericalError("non-finite log posterior at iteration " + std::to_string(it + 1));
    }
    out.lp_trace.push_back(lp);

    if (it < cfg.n_burnin) {
      for (std::size_t i = 0; i < q; ++i) window_accepts[i] += acc[i] ? 1 : 0;
      if ((it + 1) % cfg.adapt_window == 0) {
        ++windows;
        const double gain = 1.0 / std::sqrt(static_cast<double>(windows));
        for (std::size_t i = 0; i < q; ++i) {
          if (steps[i] == 0.0) continue;
          const double rate = static_cast<double>(window_accepts[i]) /
                              static_cast<double>(cfg.adapt_window);
          steps[i] = std::clamp(steps[i] * std::exp(gain * (rate - cfg.adapt_target) * 2.0),
                                1e-3, 20.0);
          window_accepts[i] = 0;
        }
      }
      continue;
    }
    for (std::size_t i = 0; i < q; ++i) kept_accepts[i] += acc[i] ? 1 : 0;
    if ((it - cfg.n_burnin) % cfg.thin == 0 && row < cfg.retained()) {
      out.layout.pack(s, lp, out.draws.row(idx(row)));
      ++row;
    }
  }
  out.draws.conservativeResize(idx(row), Eigen::NoChange);
  const double kept = static_cast<double>(cfg.n_iter - cfg.n_burnin);
  out.acceptance.resize(q);
  for (std::size_t i = 0; i < q; ++i) out.acceptance[i] = static_cast<double>(kept_accepts[i]) / kept;
  out.final_step = steps;
  return out;
}

void write_samples_csv(std::ostream& out, const PosteriorSamples& samples) {
  const auto& names = samples.layout.names();
  for (std::size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << names[c];
  out << '\n';
  for (Eigen::Index r = 0; r < samples.draws.rows(); ++r) {
    for (Eigen::Index c = 0; c < samples.draws.cols(); ++c) {
      out << (c ? "," : "") << csv::format_double(samples.draws(r, c));
    }
    out << '\n';
  }
}

}  // namespace mdagar
