#include "mdagar/evidence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mdagar/errors.hpp"
#include "mdagar/linalg.hpp"

namespace mdagar {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

double sample_variance(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / (n - 1.0);
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Ratio of the batch-means variance to the iid variance; >= 1 under positive
// autocorrelation.
double batch_inflation(const std::vector<double>& v) {
  const std::size_t n = v.size();
  const auto b = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  if (b < 2 || n / b < 2) return 1.0;
  const std::size_t batches = n / b;
  std::vector<double> means(batches, 0.0);
  for (std::size_t i = 0; i < batches; ++i) {
    for (std::size_t j = 0; j < b; ++j) means[i] += v[i * b + j];
    means[i] /= static_cast<double>(b);
  }
  const double iid = sample_variance(v);
  if (!(iid > 0.0)) return 1.0;
  return std::max(1.0, static_cast<double>(b) * sample_variance(means) / iid);
}

}  // namespace

// ---------------------------------------------------------------- transform

ThetaTransform::ThetaTransform(std::vector<std::size_t> p) : p_(std::move(p)) {
  n_beta_ = std::accumulate(p_.begin(), p_.end(), std::size_t{0});
  const std::size_t q = p_.size();
  dim_ = n_beta_ + 3 * q + q * (q - 1);
}

ThetaTransform ThetaTransform::for_spec(const ModelSpec& spec) {
  std::vector<std::size_t> p(spec.q());
  for (std::size_t i = 0; i < spec.q(); ++i) p[i] = spec.data().p(i);
  return ThetaTransform(std::move(p));
}

UnconstrainedSample ThetaTransform::to_unconstrained(const ParamState& s) const {
  const std::size_t q = this->q();
  if (s.q() != q) throw ValidationError("state has the wrong number of diseases");
  if (!s.in_support()) throw ValidationError("state lies outside the parameter support");
  UnconstrainedSample out;
  out.values.resize(idx(dim_));
  std::size_t at = 0;
  for (std::size_t i = 0; i < q; ++i) {
    if (static_cast<std::size_t>(s.beta[i].size()) != p_[i]) {
      throw ValidationError("beta has the wrong length");
    }
    out.values.segment(idx(at), idx(p_[i])) = s.beta[i];
    at += p_[i];
  }
  for (std::size_t i = 0; i < q; ++i) out.values[idx(at++)] = std::log(s.sigma2[idx(i)]);
  for (std::size_t i = 0; i < q; ++i) out.values[idx(at++)] = std::log(s.tau[idx(i)]);
  for (std::size_t i = 1; i < q; ++i) {
    for (std::size_t ip = 0; ip < i; ++ip) {
      out.values[idx(at++)] = s.eta.eta0(i, ip);
      out.values[idx(at++)] = s.eta.eta1(i, ip);
    }
  }
  for (std::size_t i = 0; i < q; ++i) out.values[idx(at++)] = logit(s.rho[idx(i)]);
  out.log_jacobian = log_jacobian(out.values);
  return out;
}

ParamState ThetaTransform::to_constrained(const Eigen::VectorXd& u) const {
  if (static_cast<std::size_t>(u.size()) != dim_) {
    throw ValidationError("unconstrained vector has length " + std::to_string(u.size()) +
                          ", expected " + std::to_string(dim_));
  }
  const std::size_t q = this->q();
  ParamState s;
  s.beta.resize(q);
  s.sigma2.resize(idx(q));
  s.tau.resize(idx(q));
  s.rho.resize(idx(q));
  s.eta = InteractionCoeffs(q);
  std::size_t at = 0;
  for (std::size_t i = 0; i < q; ++i) {
    s.beta[i] = u.segment(idx(at), idx(p_[i]));
    at += p_[i];
  }
  for (std::size_t i = 0; i < q; ++i) s.sigma2[idx(i)] = std::exp(u[idx(at++)]);
  for (std::size_t i = 0; i < q; ++i) s.tau[idx(i)] = std::exp(u[idx(at++)]);
  for (std::size_t i = 1; i < q; ++i) {
    for (std::size_t ip = 0; ip < i; ++ip) {
      const double e0 = u[idx(at++)];
      const double e1 = u[idx(at++)];
      s.eta.set(i, ip, e0, e1);
    }
  }
  for (std::size_t i = 0; i < q; ++i) s.rho[idx(i)] = logistic(u[idx(at++)]);
  return s;
}

double ThetaTransform::log_jacobian(const Eigen::VectorXd& u) const {
  const std::size_t q = this->q();
  double lj = 0.0;
  std::size_t at = n_beta_;
  for (std::size_t i = 0; i < 2 * q; ++i) lj += u[idx(at++)];  // log sigma^2, log tau
  at += q * (q - 1);
  for (std::size_t i = 0; i < q; ++i) {
    // log[rho (1 - rho)] = -|g| - 2 log(1 + e^{-|g|})
    const double g = std::abs(u[idx(at++)]);
    lj += -g - 2.0 * std::log1p(std::exp(-g));
  }
  return lj;
}

// ---------------------------------------------------------------- proposal

GaussianProposal::GaussianProposal(Eigen::VectorXd mean, const Eigen::MatrixXd& cov)
    : mean_(std::move(mean)), cov_(cov) {
  if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) {
    throw ValidationError("proposal mean and covariance disagree in dimension");
  }
  llt_ = cholesky_with_jitter(cov_, "proposal covariance");
}

double GaussianProposal::log_density(const Eigen::VectorXd& x) const {
  return mvn_log_density(x, mean_, llt_);
}

Eigen::VectorXd GaussianProposal::sample(Rng& rng) const {
  return mean_ + llt_.matrixL() * standard_normal_vector(rng, mean_.size());
}

ProposalFit fit_proposal(const Eigen::MatrixXd& draws, double split) {
  if (!(split > 0.0 && split < 1.0)) throw ValidationError("split must lie in (0, 1)");
  const auto n = static_cast<std::size_t>(draws.rows());
  const auto d = static_cast<std::size_t>(draws.cols());
  if (n < 2 * d + 2) {
    throw ValidationError("bridge sampling needs at least " + std::to_string(2 * d + 2) +
                          " retained draws, got " + std::to_string(n));
  }
  const auto n_fit = static_cast<std::size_t>(std::floor(split * static_cast<double>(n)));
  if (n_fit < 2 || n - n_fit < 2) throw ValidationError("split leaves a pool with fewer than 2 draws");

  const Eigen::MatrixXd fit = draws.topRows(idx(n_fit));
  const Eigen::VectorXd mean = fit.colwise().mean().transpose();
  const Eigen::MatrixXd centered = fit.rowwise() - mean.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n_fit - 1);

  ProposalFit out;
  out.proposal = GaussianProposal(mean, cov);
  out.held_out = draws.bottomRows(idx(n - n_fit));
  out.n_fit = n_fit;
  return out;
}

// ---------------------------------------------------------------- bridge

BridgeEstimate bridge_sampling(const LogTarget& log_target, const Eigen::MatrixXd& held_out,
                               const GaussianProposal& proposal, std::size_t n2, double tol,
                               std::size_t max_iter, Rng& rng) {
  if (!(tol > 0.0)) throw ValidationError("bridge tolerance must be positive");
  if (max_iter == 0) throw ValidationError("bridge max_iter must be positive");
  const auto n1 = static_cast<std::size_t>(held_out.rows());
  if (n1 == 0) throw ValidationError("empty held-out pool");
  if (static_cast<std::size_t>(held_out.cols()) != proposal.dim()) {
    throw ValidationError("held-out draws and proposal disagree in dimension");
  }
  if (n2 == 0) n2 = n1;

  // l = log target - log proposal, on each pool.
  std::vector<double> l1(n1), l2(n2);
  for (std::size_t j = 0; j < n1; ++j) {
    const Eigen::VectorXd x = held_out.row(idx(j)).transpose();
    l1[j] = log_target(x) - proposal.log_density(x);
    if (!std::isfinite(l1[j])) {
      throw NumericalError("bridge sampling: non-finite ratio in the posterior pool at draw " +
                           std::to_string(j + 1));
    }
  }
  for (std::size_t i = 0; i < n2; ++i) {
    const Eigen::VectorXd x = proposal.sample(rng);
    l2[i] = log_target(x) - proposal.log_density(x);
    if (std::isnan(l2[i]) || l2[i] == INFINITY) {
      throw NumericalError("bridge sampling: non-finite ratio in the proposal pool at draw " +
                           std::to_string(i + 1));
    }
  }

  const double total = static_cast<double>(n1 + n2);
  const double log_s1 = std::log(static_cast<double>(n1) / total);
  const double log_s2 = std::log(static_cast<double>(n2) / total);

  BridgeEstimate est;
  est.n1 = n1;
  est.n2 = n2;
  double log_r = log_mean_exp(l2);
  if (!std::isfinite(log_r)) log_r = log_mean_exp(l1);

  std::vector<double> num(n2), den(n1);
  for (std::size_t t = 0; t < max_iter; ++t) {
    for (std::size_t i = 0; i < n2; ++i) {
      num[i] = l2[i] - log_add_exp(log_s1 + l2[i], log_s2 + log_r);
    }
    for (std::size_t j = 0; j < n1; ++j) {
      den[j] = -log_add_exp(log_s1 + l1[j], log_s2 + log_r);
    }
    const double next = log_mean_exp(num) - log_mean_exp(den);
    if (!std::isfinite(next)) {
      throw NumericalError("bridge sampling: fixed-point iterate became non-finite");
    }
    est.trace.push_back(next);
    const double delta = std::abs(next - log_r);
    log_r = next;
    est.n_iterations = t + 1;
    if (delta < tol) {
      est.converged = true;
      break;
    }
  }
  est.log_ml = log_r;

  // Relative mean squared error of the evidence estimate.
  const double s1 = std::exp(log_s1);
  const double s2 = std::exp(log_s2);
  std::vector<double> f1(n2), f2(n1);
  for (std::size_t i = 0; i < n2; ++i) {
    const double a = std::exp(l2[i] - log_r);
    f1[i] = a / (s1 * a + s2);
  }
  for (std::size_t j = 0; j < n1; ++j) {
    const double b = std::exp(l1[j] - log_r);
    f2[j] = 1.0 / (s1 * b + s2);
  }
  double re2 = 0.0;
  if (n2 >= 2) {
    const double m = mean_of(f1);
    if (m > 0.0) re2 += sample_variance(f1) / (m * m) / static_cast<double>(n2);
  }
  if (n1 >= 2) {
    const double m = mean_of(f2);
    if (m > 0.0) {
      re2 += batch_inflation(f2) * sample_variance(f2) / (m * m) / static_cast<double>(n1);
    }
  }
  est.mc_se = std::sqrt(re2);
  return est;
}

void BridgeConfig::validate() const {
  if (!(split > 0.0 && split < 1.0)) throw ValidationError("bridge split must lie in (0, 1)");
  if (!(tol > 0.0)) throw ValidationError("bridge tol must be positive");
  if (max_iter == 0) throw ValidationError("bridge max_iter must be positive");
}

double unconstrained_log_posterior(const ModelSpec& spec, const ThetaTransform& transform,
                                   const Eigen::VectorXd& u) {
  const ParamState s = transform.to_constrained(u);
  const double prior = log_prior_theta(s, spec.prior());
  if (prior == -INFINITY) return -INFINITY;
  return integrated_loglik(s, spec) + prior + transform.log_jacobian(u);
}

Eigen::MatrixXd unconstrained_draws(const PosteriorSamples& samples, const ThetaTransform& transform) {
  Eigen::MatrixXd out(samples.draws.rows(), idx(transform.dim()));
  for (std::size_t r = 0; r < samples.size(); ++r) {
    out.row(idx(r)) = transform.to_unconstrained(samples.state(r)).values.transpose();
  }
  return out;
}

BridgeEstimate bridge_estimate(const ModelSpec& spec, const PosteriorSamples& samples,
                               const BridgeConfig& cfg) {
  cfg.validate();
  const ThetaTransform transform = ThetaTransform::for_spec(spec);
  const ProposalFit fit = fit_proposal(unconstrained_draws(samples, transform), cfg.split);
  Rng rng(cfg.seed);
  const LogTarget target = [&](const Eigen::VectorXd& u) {
    return unconstrained_log_posterior(spec, transform, u);
  };
  return bridge_sampling(target, fit.held_out, fit.proposal, cfg.n2, cfg.tol, cfg.max_iter, rng);
}

// ---------------------------------------------------------------- model probabilities

ModelPosterior posterior_model_probs(std::span<const double> log_ml, std::span<const double> prior) {
  if (log_ml.empty()) throw ValidationError("no model evidence to normalize");
  const std::size_t t = log_ml.size();
  ModelPosterior out;
  out.log_ml.assign(log_ml.begin(), log_ml.end());
  if (prior.empty()) {
    out.prior.assign(t, 1.0 / static_cast<double>(t));
  } else {
    if (prior.size() != t) throw ValidationError("one prior probability per model is required");
    out.prior.assign(prior.begin(), prior.end());
    double sum = 0.0;
    for (double p : out.prior) {
      if (!(p >= 0.0)) throw ValidationError("prior model probabilities must be nonnegative");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("prior model probabilities must sum to 1");
  }

  std::vector<double> logits(t);
  for (std::size_t m = 0; m < t; ++m) {
    if (std::isnan(log_ml[m]) || log_ml[m] == INFINITY) {
      throw ValidationError("log marginal likelihood of model " + std::to_string(m + 1) +
                            " is not a number");
    }
    logits[m] = out.prior[m] > 0.0 ? log_ml[m] + std::log(out.prior[m]) : -INFINITY;
  }
  const double lse = log_sum_exp(logits);
  if (!std::isfinite(lse)) throw ValidationError("every model has zero posterior weight");
  out.posterior.resize(t);
  for (std::size_t m = 0; m < t; ++m) out.posterior[m] = std::exp(logits[m] - lse);
  return out;
}

Eigen::VectorXd bma_expectation(const std::vector<Eigen::VectorXd>& means,
                                std::span<const double> probs) {
  if (means.empty()) throw ValidationError("no model means to average");
  if (means.size() != probs.size()) throw ValidationError("one probability per model mean is required");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(means.front().size());
  for (std::size_t m = 0; m < means.size(); ++m) {
    if (means[m].size() != out.size()) {
      throw ValidationError("model " + std::to_string(m + 1) + " mean has length " +
                            std::to_string(means[m].size()) + ", expected " +
                            std::to_string(out.size()));
    }
    if (probs[m] == 0.0) continue;  // skip failed models whose means may be NaN
    out += probs[m] * means[m];
  }
  return out;
}

Eigen::VectorXd aligned_posterior_mean(const PosteriorSamples& samples) {
  const ParameterLayout& layout = samples.layout;
  const std::size_t q = layout.q();
  const std::size_t k = layout.k();
  std::vector<std::size_t> position(q);
  for (std::size_t pos = 0; pos < q; ++pos) position[layout.ordering()[pos]] = pos;

  std::size_t n_beta = 0;
  for (std::size_t pos = 0; pos < q; ++pos) n_beta += layout.p(pos);
  const Eigen::RowVectorXd col_means = samples.draws.colwise().mean();
  Eigen::VectorXd out(idx(n_beta + q * k));
  std::size_t at = 0;
  for (std::size_t d = 0; d < q; ++d) {
    const std::size_t pos = position[d];
    for (std::size_t c = 0; c < layout.p(pos); ++c) out[idx(at++)] = col_means[idx(layout.beta_column(pos, c))];
  }
  for (std::size_t d = 0; d < q; ++d) {
    const std::size_t pos = position[d];
    for (std::size_t j = 0; j < k; ++j) out[idx(at++)] = col_means[idx(layout.w_column(pos, j))];
  }
  return out;
}

std::vector<std::vector<std::size_t>> enumerate_orderings(std::size_t q) {
  if (q < 1 || q > 6) {
    throw ValidationError("orderings can be enumerated for 1 to 6 diseases, got " + std::to_string(q));
  }
  std::vector<std::size_t> perm(q);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<std::vector<std::size_t>> out;
  do {
    out.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

}  // namespace mdagar
