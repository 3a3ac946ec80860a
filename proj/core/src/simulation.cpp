#include "mdagar/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <ostream>

#include <Eigen/Cholesky>

#include "mdagar/csv.hpp"
#include "mdagar/errors.hpp"
#include "mdagar/linalg.hpp"
#include "mdagar/parallel.hpp"

namespace mdagar {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

}  // namespace

// ---------------------------------------------------------------- geometry

Eigen::MatrixXd exp_decay_covariance(std::span<const Point> coords, double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw ValidationError("rho must lie in (0, 1)");
  const double phi = -std::log(rho);
  const std::size_t k = coords.size();
  Eigen::MatrixXd d(idx(k), idx(k));
  for (std::size_t a = 0; a < k; ++a) {
    d(idx(a), idx(a)) = 1.0;
    for (std::size_t b = 0; b < a; ++b) {
      const double dist = std::hypot(coords[a].x - coords[b].x, coords[a].y - coords[b].y);
      if (dist == 0.0) {
        throw ValidationError("coordinates " + std::to_string(b + 1) + " and " +
                              std::to_string(a + 1) + " coincide");
      }
      d(idx(a), idx(b)) = d(idx(b), idx(a)) = std::exp(-phi * dist);
    }
  }
  return d;
}

std::vector<Point> parse_coordinates(std::istream& in, const ArealGraph& graph) {
  const auto rows = csv::read_rows(in, true);
  std::vector<std::optional<Point>> slots(graph.size());
  for (const auto& row : rows) {
    const std::string where = "coordinates line " + std::to_string(row.line);
    if (row.fields.size() == 3 && row.fields[0] == "label") continue;
    if (row.fields.size() != 3) throw ValidationError(where + ": expected label,x,y");
    const auto j = graph.index_of(row.fields[0]);
    if (!j) throw ValidationError(where + ": region '" + row.fields[0] + "' not in adjacency graph");
    if (slots[*j]) throw ValidationError(where + ": duplicate region '" + row.fields[0] + "'");
    slots[*j] = Point{csv::parse_double(row.fields[1], where + " x"),
                      csv::parse_double(row.fields[2], where + " y")};
  }
  std::vector<Point> out;
  std::string missing;
  for (std::size_t j = 0; j < slots.size(); ++j) {
    if (!slots[j]) {
      missing += (missing.empty() ? "" : ", ") + graph.labels()[j];
      continue;
    }
    out.push_back(*slots[j]);
  }
  if (!missing.empty()) throw ValidationError("coordinates missing for regions: " + missing);
  return out;
}

std::vector<Point> load_coordinates(const std::filesystem::path& path, const ArealGraph& graph) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open coordinates file " + path.string());
  return parse_coordinates(in, graph);
}

void write_coordinates(std::ostream& out, const ArealGraph& graph, std::span<const Point> coords) {
  out << "label,x,y\n";
  for (std::size_t j = 0; j < coords.size(); ++j) {
    out << graph.labels()[j] << ',' << csv::format_double(coords[j].x) << ','
        << csv::format_double(coords[j].y) << '\n';
  }
}

Geometry grid_minus_corner() {
  constexpr std::size_t n = 7;
  const ArealGraph full = grid_graph(n, n);
  std::vector<std::size_t> keep(n * n - 1);
  std::iota(keep.begin(), keep.end(), std::size_t{0});
  Geometry g;
  g.graph = std::make_shared<const ArealGraph>(full.induced(keep));
  for (std::size_t v : keep) {
    g.coords.push_back({static_cast<double>(v % n), static_cast<double>(v / n)});
  }
  return g;
}

// ---------------------------------------------------------------- dense truth

DenseTruth::DenseTruth(std::shared_ptr<const ArealGraph> graph, std::vector<Eigen::MatrixXd> d,
                       Eigen::VectorXd tau, InteractionCoeffs eta)
    : graph_(std::move(graph)), d_(std::move(d)), tau_(std::move(tau)), eta_(std::move(eta)) {
  const std::size_t k = graph_->size();
  if (d_.empty()) throw ValidationError("truth needs at least one disease");
  if (static_cast<std::size_t>(tau_.size()) != d_.size() || eta_.diseases() != d_.size()) {
    throw ValidationError("truth parameters disagree in the number of diseases");
  }
  for (std::size_t i = 0; i < d_.size(); ++i) {
    if (static_cast<std::size_t>(d_[i].rows()) != k || static_cast<std::size_t>(d_[i].cols()) != k) {
      throw ValidationError("spatial covariance has the wrong size");
    }
    if (!(tau_[idx(i)] > 0.0)) throw ValidationError("tau must be positive");
    const Eigen::LLT<Eigen::MatrixXd> llt(d_[i]);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("spatial covariance of disease " + std::to_string(i + 1) + " is not SPD");
    }
    chol_.push_back(llt.matrixL());
  }
}

Eigen::MatrixXd DenseTruth::unit_lower() const {
  const std::size_t k = this->k();
  const std::size_t n = q() * k;
  const Eigen::MatrixXd m = Eigen::MatrixXd(adjacency_matrix(*graph_));
  Eigen::MatrixXd l = Eigen::MatrixXd::Identity(idx(n), idx(n));
  for (std::size_t i = 1; i < q(); ++i) {
    for (std::size_t ip = 0; ip < i; ++ip) {
      l.block(idx(i * k), idx(ip * k), idx(k), idx(k)) =
          -(eta_.eta0(i, ip) * Eigen::MatrixXd::Identity(idx(k), idx(k)) + eta_.eta1(i, ip) * m);
    }
  }
  return l;
}

Eigen::MatrixXd DenseTruth::precision() const {
  const std::size_t k = this->k();
  const std::size_t n = q() * k;
  Eigen::MatrixXd lambda = Eigen::MatrixXd::Zero(idx(n), idx(n));
  for (std::size_t i = 0; i < q(); ++i) {
    const Eigen::LLT<Eigen::MatrixXd> llt(d_[i]);
    lambda.block(idx(i * k), idx(i * k), idx(k), idx(k)) =
        tau_[idx(i)] * llt.solve(Eigen::MatrixXd::Identity(idx(k), idx(k)));
  }
  const Eigen::MatrixXd l = unit_lower();
  Eigen::MatrixXd out = l.transpose() * lambda * l;
  return 0.5 * (out + out.transpose());
}

Eigen::MatrixXd DenseTruth::covariance() const {
  const std::size_t k = this->k();
  const std::size_t n = q() * k;
  // C = (I - A)^{-1} blockdiag(chol(D_i) / sqrt(tau_i)); cov = C C^T.
  Eigen::MatrixXd root = Eigen::MatrixXd::Zero(idx(n), idx(n));
  for (std::size_t i = 0; i < q(); ++i) {
    root.block(idx(i * k), idx(i * k), idx(k), idx(k)) = chol_[i] / std::sqrt(tau_[idx(i)]);
  }
  const Eigen::MatrixXd l = unit_lower();
  const Eigen::MatrixXd c = l.triangularView<Eigen::UnitLower>().solve(root);
  Eigen::MatrixXd out = c * c.transpose();
  return 0.5 * (out + out.transpose());
}

Eigen::VectorXd DenseTruth::sample(Rng& rng) const {
  const std::size_t k = this->k();
  const Eigen::MatrixXd m = Eigen::MatrixXd(adjacency_matrix(*graph_));
  Eigen::VectorXd w(idx(q() * k));
  for (std::size_t i = 0; i < q(); ++i) {
    Eigen::VectorXd wi = chol_[i] * standard_normal_vector(rng, idx(k)) / std::sqrt(tau_[idx(i)]);
    for (std::size_t ip = 0; ip < i; ++ip) {
      const Eigen::VectorXd prev = w.segment(idx(ip * k), idx(k));
      wi += eta_.eta0(i, ip) * prev + eta_.eta1(i, ip) * (m * prev);
    }
    w.segment(idx(i * k), idx(k)) = wi;
  }
  return w;
}

Eigen::VectorXd DenseTruth::within_region_correlation(std::size_t i, std::size_t ip) const {
  const std::size_t k = this->k();
  const Eigen::MatrixXd cov = covariance();
  Eigen::VectorXd out(idx(k));
  for (std::size_t j = 0; j < k; ++j) {
    const auto a = idx(i * k + j);
    const auto b = idx(ip * k + j);
    out[idx(j)] = cov(a, b) / std::sqrt(cov(a, a) * cov(b, b));
  }
  return out;
}

DenseTruth exponential_truth(const Geometry& geometry, const Eigen::VectorXd& tau,
                             const Eigen::VectorXd& rho, const InteractionCoeffs& eta) {
  if (geometry.coords.size() != geometry.graph->size()) {
    throw ValidationError("exponential truth needs one coordinate per region");
  }
  std::vector<Eigen::MatrixXd> d;
  for (Eigen::Index i = 0; i < rho.size(); ++i) d.push_back(exp_decay_covariance(geometry.coords, rho[i]));
  return DenseTruth(geometry.graph, std::move(d), tau, eta);
}

DenseTruth dagar_truth(std::shared_ptr<const ArealGraph> graph, const Eigen::VectorXd& tau,
                       const Eigen::VectorXd& rho, const InteractionCoeffs& eta) {
  std::vector<Eigen::MatrixXd> d;
  for (Eigen::Index i = 0; i < rho.size(); ++i) {
    const Eigen::MatrixXd r = dagar_covariance_root(DagarPrecision(graph, rho[i]));
    d.push_back(r * r.transpose());
  }
  return DenseTruth(std::move(graph), std::move(d), tau, eta);
}

std::vector<EtaRegime> standard_eta_regimes() {
  return {{"low", 0.05, 0.1}, {"medium", 0.5, 0.3}, {"high", 2.5, 0.5}};
}

// ---------------------------------------------------------------- generator

void GeneratorConfig::validate() const {
  const std::size_t nq = q();
  if (!geometry.graph) throw ValidationError("generator has no graph");
  if (nq == 0) throw ValidationError("generator has no diseases");
  if (static_cast<std::size_t>(sigma2.size()) != nq || static_cast<std::size_t>(tau.size()) != nq ||
      static_cast<std::size_t>(rho.size()) != nq || eta.diseases() != nq) {
    throw ValidationError("generator parameters disagree in the number of diseases");
  }
  check_permutation(order, nq);
  for (const auto& b : beta) {
    if (b.size() == 0) throw ValidationError("each disease needs at least one coefficient");
  }
  for (Eigen::Index i = 0; i < sigma2.size(); ++i) {
    if (!(sigma2[i] > 0.0) || !(tau[i] > 0.0)) throw ValidationError("sigma2 and tau must be positive");
    if (!(rho[i] > 0.0 && rho[i] < 1.0)) throw ValidationError("rho must lie in (0, 1)");
  }
  if (truth == TruthKind::kExponential && geometry.coords.size() != geometry.graph->size()) {
    throw ValidationError("exponential truth requires coordinates for every region");
  }
  if (n_replicates == 0) throw ValidationError("n_replicates must be positive");
}

GeneratorConfig bivariate_config(const Geometry& geometry, const EtaRegime& regime) {
  GeneratorConfig cfg;
  cfg.geometry = geometry;
  cfg.beta = {Eigen::Vector2d(1, 5), Eigen::Vector3d(2, 4, 5)};
  cfg.sigma2 = Eigen::VectorXd::Constant(2, 0.4);
  cfg.tau = Eigen::VectorXd::Constant(2, 0.25);
  cfg.rho = Eigen::Vector2d(0.2, 0.8);
  cfg.eta = InteractionCoeffs(2);
  cfg.eta.set(1, 0, regime.eta0, regime.eta1);
  cfg.order = {0, 1};
  cfg.n_replicates = 85;
  return cfg;
}

GeneratorConfig three_disease_config(const Geometry& geometry, std::vector<std::size_t> order) {
  GeneratorConfig cfg;
  cfg.geometry = geometry;
  cfg.beta = {Eigen::Vector2d(1, 5), Eigen::Vector3d(2, 4, 5), Eigen::Vector3d(5, 3, 6)};
  cfg.sigma2 = Eigen::VectorXd::Constant(3, 0.4);
  cfg.tau = Eigen::VectorXd::Constant(3, 0.25);
  cfg.rho = Eigen::Vector3d(0.2, 0.8, 0.5);
  cfg.eta = InteractionCoeffs(3);
  cfg.eta.set(1, 0, 0.5, 0.3);
  cfg.eta.set(2, 0, 1.0, 0.6);
  cfg.eta.set(2, 1, 1.5, 0.9);
  std::vector<std::size_t> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  if (sorted != std::vector<std::size_t>{0, 1, 2}) {
    throw ValidationError("three-disease order must be a permutation of the three diseases");
  }
  cfg.order = std::move(order);
  cfg.n_replicates = 50;
  return cfg;
}

std::vector<Eigen::MatrixXd> draw_covariates(const GeneratorConfig& cfg, Rng& rng) {
  const std::size_t k = cfg.geometry.graph->size();
  std::vector<Eigen::MatrixXd> X;
  for (const auto& b : cfg.beta) {
    Eigen::MatrixXd x(idx(k), b.size());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      for (Eigen::Index c = 0; c < x.cols(); ++c) x(r, c) = standard_normal(rng);
    }
    X.push_back(std::move(x));
  }
  return X;
}

DenseTruth build_truth(const GeneratorConfig& cfg) {
  if (cfg.truth == TruthKind::kExponential) return exponential_truth(cfg.geometry, cfg.tau, cfg.rho, cfg.eta);
  return dagar_truth(cfg.geometry.graph, cfg.tau, cfg.rho, cfg.eta);
}

Simulation simulate(const GeneratorConfig& cfg, std::vector<Eigen::MatrixXd> X) {
  cfg.validate();
  const std::size_t q = cfg.q();
  const std::size_t k = cfg.geometry.graph->size();
  const DenseTruth truth = build_truth(cfg);

  Simulation out;
  Rng cov_rng(derive_seed(cfg.seed, 0));
  out.X = X.empty() ? draw_covariates(cfg, cov_rng) : std::move(X);
  if (out.X.size() != q) throw ValidationError("one covariate matrix per disease is required");
  for (std::size_t d = 0; d < q; ++d) {
    if (out.X[d].rows() != idx(k) || out.X[d].cols() != cfg.beta[d].size()) {
      throw ValidationError("covariate matrix " + std::to_string(d + 1) + " has the wrong shape");
    }
  }

  for (std::size_t r = 0; r < cfg.n_replicates; ++r) {
    Rng rng(derive_seed(cfg.seed, r + 1));
    const Eigen::VectorXd by_position = truth.sample(rng);
    SimReplicate rep;
    rep.w.resize(idx(q * k));
    for (std::size_t pos = 0; pos < q; ++pos) {
      rep.w.segment(idx(cfg.order[pos] * k), idx(k)) = by_position.segment(idx(pos * k), idx(k));
    }
    rep.data.region_labels = cfg.geometry.graph->labels();
    for (std::size_t d = 0; d < q; ++d) {
      rep.data.disease_labels.push_back(std::to_string(d + 1));
      std::vector<std::string> names;
      for (Eigen::Index c = 0; c < cfg.beta[d].size(); ++c) names.push_back("x" + std::to_string(c + 1));
      rep.data.covariate_names.push_back(std::move(names));
      const double sd = std::sqrt(cfg.sigma2[idx(d)]);
      Eigen::VectorXd y = out.X[d] * cfg.beta[d] + rep.w.segment(idx(d * k), idx(k));
      for (Eigen::Index j = 0; j < y.size(); ++j) y[j] += sd * standard_normal(rng);
      rep.data.y.push_back(std::move(y));
      rep.data.X.push_back(out.X[d]);
    }
    out.replicates.push_back(std::move(rep));
  }
  return out;
}

// ---------------------------------------------------------------- order recovery

std::string format_ordering(const std::vector<std::size_t>& ordering) {
  std::string s = "[";
  for (std::size_t i = 0; i < ordering.size(); ++i) {
    s += (i ? " " : "") + std::to_string(ordering[i] + 1);
  }
  return s + "]";
}

RecoveryResult run_order_recovery(const Geometry& geometry, const RecoveryConfig& cfg) {
  if (cfg.replicates == 0) throw ValidationError("order recovery needs at least one replicate");
  cfg.chain.validate();
  cfg.bridge.validate();
  cfg.prior.validate();

  RecoveryResult result;
  result.orderings = enumerate_orderings(3);
  const std::size_t t_count = result.orderings.size();
  const std::size_t reps = cfg.replicates;

  // One covariate draw for the whole experiment.
  Rng cov_rng(derive_seed(cfg.seed, 0));
  const std::vector<Eigen::MatrixXd> X =
      draw_covariates(three_disease_config(geometry, {0, 1, 2}), cov_rng);

  std::vector<SimReplicate> datasets(t_count * reps);
  for (std::size_t t = 0; t < t_count; ++t) {
    GeneratorConfig gen = three_disease_config(geometry, result.orderings[t]);
    gen.n_replicates = reps;
    gen.seed = derive_seed(cfg.seed, t + 1);
    Simulation sim = simulate(gen, X);
    for (std::size_t r = 0; r < reps; ++r) datasets[t * reps + r] = std::move(sim.replicates[r]);
  }

  result.log_ml = Eigen::MatrixXd::Constant(idx(t_count * reps), idx(t_count), -INFINITY);
  std::vector<std::vector<RecoveryFailure>> failures(t_count * reps);

  parallel_for(t_count * reps, cfg.jobs, [&](std::size_t task) {
    const std::size_t t = task / reps;
    const std::size_t r = task % reps;
    auto data = std::make_shared<const Dataset>(datasets[task].data);
    for (std::size_t m = 0; m < t_count; ++m) {
      try {
        const ModelSpec spec(geometry.graph, data, cfg.prior, result.orderings[m]);
        ChainConfig chain = cfg.chain;
        chain.seed = derive_seed(cfg.seed, 1000 + task * t_count + m);
        const PosteriorSamples samples = run_chain(spec, chain);
        BridgeConfig bridge = cfg.bridge;
        bridge.seed = derive_seed(chain.seed, 1);
        const BridgeEstimate est = bridge_estimate(spec, samples, bridge);
        result.log_ml(idx(task), idx(m)) = est.log_ml;
      } catch (const Error& e) {
        failures[task].push_back({t, r, m, e.what()});
      }
    }
  });

  result.counts = Eigen::MatrixXi::Zero(idx(t_count), idx(t_count));
  for (std::size_t task = 0; task < t_count * reps; ++task) {
    for (auto& f : failures[task]) result.failures.push_back(std::move(f));
    Eigen::Index best = 0;
    const double top = result.log_ml.row(idx(task)).maxCoeff(&best);
    if (std::isfinite(top)) ++result.counts(idx(task / reps), best);
  }
  result.proportions = Eigen::MatrixXd::Zero(idx(t_count), idx(t_count));
  for (std::size_t t = 0; t < t_count; ++t) {
    const int decided = result.counts.row(idx(t)).sum();
    if (decided > 0) {
      result.proportions.row(idx(t)) = result.counts.row(idx(t)).cast<double>() / decided;
    }
  }
  return result;
}

void write_recovery_table(std::ostream& out, const RecoveryResult& result) {
  out << "true_model";
  for (const auto& o : result.orderings) out << ',' << format_ordering(o);
  out << '\n';
  for (std::size_t t = 0; t < result.orderings.size(); ++t) {
    out << format_ordering(result.orderings[t]);
    for (std::size_t m = 0; m < result.orderings.size(); ++m) {
      out << ',' << csv::format_double(result.proportions(idx(t), idx(m)));
    }
    out << '\n';
  }
}

}  // namespace mdagar
