#include "mdagar/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mdagar/errors.hpp"
#include "mdagar/linalg.hpp"

namespace mdagar {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

double column_variance(const Eigen::MatrixXd& m, Eigen::Index c) {
  const double mean = m.col(c).mean();
  return (m.col(c).array() - mean).square().sum() / static_cast<double>(m.rows() - 1);
}

}  // namespace

WaicResult waic(const Eigen::MatrixXd& loglik) {
  if (loglik.rows() < 2) throw ValidationError("WAIC needs at least 2 draws");
  WaicResult out;
  std::vector<double> column(static_cast<std::size_t>(loglik.rows()));
  for (Eigen::Index c = 0; c < loglik.cols(); ++c) {
    for (Eigen::Index r = 0; r < loglik.rows(); ++r) column[static_cast<std::size_t>(r)] = loglik(r, c);
    out.lpd_hat += log_mean_exp(column);
    out.p_waic += column_variance(loglik, c);
  }
  out.waic = -2.0 * (out.lpd_hat - out.p_waic);
  return out;
}

DScoreResult d_score(const Eigen::VectorXd& y, const Eigen::MatrixXd& replicates) {
  if (replicates.rows() < 2) throw ValidationError("D score needs at least 2 replicates");
  if (replicates.cols() != y.size()) {
    throw ValidationError("replicates have " + std::to_string(replicates.cols()) +
                          " columns for " + std::to_string(y.size()) + " outcomes");
  }
  DScoreResult out;
  for (Eigen::Index c = 0; c < y.size(); ++c) {
    const double r = y[c] - replicates.col(c).mean();
    out.g += r * r;
    out.p += column_variance(replicates, c);
  }
  out.d = out.g + out.p;
  return out;
}

AmseResult amse(const std::vector<Eigen::VectorXd>& truths,
                const std::vector<Eigen::VectorXd>& estimates) {
  if (estimates.empty()) throw ValidationError("AMSE needs at least one dataset");
  if (truths.size() != estimates.size()) throw ValidationError("one truth per estimate is required");
  std::vector<double> sq;
  for (std::size_t n = 0; n < estimates.size(); ++n) {
    if (estimates[n].size() != truths[n].size()) {
      throw ValidationError("estimate " + std::to_string(n + 1) + " has length " +
                            std::to_string(estimates[n].size()) + ", truth has " +
                            std::to_string(truths[n].size()));
    }
    for (Eigen::Index j = 0; j < truths[n].size(); ++j) {
      const double e = estimates[n][j] - truths[n][j];
      sq.push_back(e * e);
    }
  }
  const double m = static_cast<double>(sq.size());
  if (sq.size() < 2) throw ValidationError("AMSE standard error needs at least 2 entries");
  AmseResult out;
  for (double v : sq) out.amse += v;
  out.amse /= m;
  double ss = 0.0;
  for (double v : sq) ss += (v - out.amse) * (v - out.amse);
  out.mc_se = std::sqrt(ss / (m * (m - 1.0)));
  return out;
}

AmseResult amse(const Eigen::VectorXd& truth, const std::vector<Eigen::VectorXd>& estimates) {
  return amse(std::vector<Eigen::VectorXd>(estimates.size(), truth), estimates);
}

double gaussian_kl(const Eigen::MatrixXd& q_true, const Eigen::MatrixXd& q_model) {
  if (q_true.rows() != q_true.cols() || q_model.rows() != q_model.cols() ||
      q_true.rows() != q_model.rows()) {
    throw ValidationError("KL divergence needs two square matrices of equal size");
  }
  if (q_true == q_model) return 0.0;
  const Eigen::LLT<Eigen::MatrixXd> lt(q_true);
  const Eigen::LLT<Eigen::MatrixXd> lm(q_model);
  if (lt.info() != Eigen::Success) throw ValidationError("true precision is not SPD");
  if (lm.info() != Eigen::Success) throw ValidationError("model precision is not SPD");
  // tr(Q_m Q_t^{-1}) = |L_t^{-1} L_m|_F^2
  const Eigen::MatrixXd lmat = lm.matrixL();
  const Eigen::MatrixXd s = lt.matrixL().solve(lmat);
  const double n = static_cast<double>(q_true.rows());
  return 0.5 * (log_det_from_llt(lt) - log_det_from_llt(lm) + s.squaredNorm() - n);
}

double quantile(std::span<const double> values, double p) {
  if (values.empty()) throw ValidationError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("quantile level must lie in [0, 1]");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double h = static_cast<double>(v.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Interval credible_interval(std::span<const double> draws, double level) {
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("interval level must lie in (0, 1)");
  return {quantile(draws, 0.5 * (1.0 - level)), quantile(draws, 0.5 * (1.0 + level))};
}

double coverage(std::span<const Interval> intervals, double truth) {
  if (intervals.empty()) throw ValidationError("coverage of an empty interval set");
  std::size_t hit = 0;
  for (const Interval& iv : intervals) hit += iv.contains(truth) ? 1 : 0;
  return 100.0 * static_cast<double>(hit) / static_cast<double>(intervals.size());
}

double split_rhat(const std::vector<Eigen::VectorXd>& chains) {
  if (chains.empty()) throw ValidationError("R-hat needs at least one chain");
  const Eigen::Index n = chains.front().size();
  for (const auto& c : chains) {
    if (c.size() != n) throw ValidationError("R-hat chains must have equal length");
  }
  if (n < 4) throw ValidationError("R-hat needs at least 4 draws per chain");
  const Eigen::Index half = n / 2;
  std::vector<Eigen::VectorXd> parts;
  for (const auto& c : chains) {
    parts.emplace_back(c.head(half));
    parts.emplace_back(c.tail(half));
  }
  const double m = static_cast<double>(parts.size());
  const double len = static_cast<double>(half);
  Eigen::VectorXd means(idx(parts.size()));
  double w = 0.0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    means[idx(i)] = parts[i].mean();
    w += (parts[i].array() - means[idx(i)]).square().sum() / (len - 1.0);
  }
  w /= m;
  const double b = len * (means.array() - means.mean()).square().sum() / (m - 1.0);
  if (w == 0.0) return b == 0.0 ? 1.0 : INFINITY;
  const double var_plus = (len - 1.0) / len * w + b / len;
  return std::sqrt(var_plus / w);
}

Eigen::VectorXd stacked_outcomes(const Dataset& data) {
  const std::size_t k = data.k();
  Eigen::VectorXd y(idx(data.q() * k));
  for (std::size_t i = 0; i < data.q(); ++i) y.segment(idx(i * k), idx(k)) = data.y[i];
  return y;
}

Eigen::MatrixXd pointwise_loglik_draws(const PosteriorSamples& samples, const Dataset& data) {
  const std::size_t k = data.k();
  Eigen::MatrixXd out(samples.draws.rows(), idx(data.q() * k));
  for (std::size_t r = 0; r < samples.size(); ++r) {
    const Eigen::MatrixXd ll = pointwise_loglik(samples.state(r), data);
    for (std::size_t i = 0; i < data.q(); ++i) {
      out.block(idx(r), idx(i * k), 1, idx(k)) = ll.row(idx(i));
    }
  }
  return out;
}

Eigen::MatrixXd replicate_draws(const PosteriorSamples& samples, const Dataset& data, Rng& rng) {
  const std::size_t k = data.k();
  Eigen::MatrixXd out(samples.draws.rows(), idx(data.q() * k));
  for (std::size_t r = 0; r < samples.size(); ++r) {
    const ParamState s = samples.state(r);
    for (std::size_t i = 0; i < data.q(); ++i) {
      const Eigen::VectorXd mean = data.X[i] * s.beta[i] + JointPrecision::block(s.w, i, k);
      const double sd = std::sqrt(s.sigma2[idx(i)]);
      for (std::size_t j = 0; j < k; ++j) {
        out(idx(r), idx(i * k + j)) = mean[idx(j)] + sd * standard_normal(rng);
      }
    }
  }
  return out;
}

}  // namespace mdagar
