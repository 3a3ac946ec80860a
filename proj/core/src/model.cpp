#include "mdagar/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>

#include <Eigen/QR>

#include "mdagar/csv.hpp"
#include "mdagar/linalg.hpp"

namespace mdagar {

// ---------------------------------------------------------------- Dataset

void Dataset::validate() const {
  const std::size_t nq = y.size();
  if (nq == 0) throw ValidationError("dataset has no diseases");
  if (X.size() != nq || disease_labels.size() != nq) {
    throw ValidationError("dataset: outcome, design and label counts disagree");
  }
  if (!covariate_names.empty() && covariate_names.size() != nq) {
    throw ValidationError("dataset: covariate name table has wrong length");
  }
  const std::size_t kk = k();
  if (kk == 0) throw ValidationError("dataset has no regions");
  for (std::size_t i = 0; i < nq; ++i) {
    if (static_cast<std::size_t>(y[i].size()) != kk ||
        static_cast<std::size_t>(X[i].rows()) != kk) {
      throw ValidationError("dataset: disease '" + disease_labels[i] +
                            "' does not cover every region");
    }
    if (!y[i].allFinite() || !X[i].allFinite()) {
      throw ValidationError("dataset: non-finite value for disease '" + disease_labels[i] + "'");
    }
    if (X[i].cols() == 0) {
      throw ValidationError("dataset: empty design for disease '" + disease_labels[i] + "'");
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X[i]);
    if (qr.rank() < X[i].cols()) {
      throw ValidationError("dataset: design matrix for disease '" + disease_labels[i] +
                            "' is not of full column rank");
    }
  }
}

Dataset Dataset::reordered(const std::vector<std::size_t>& order) const {
  check_permutation(order, q());
  Dataset out;
  out.region_labels = region_labels;
  for (std::size_t p : order) {
    out.disease_labels.push_back(disease_labels[p]);
    if (!covariate_names.empty()) out.covariate_names.push_back(covariate_names[p]);
    out.y.push_back(y[p]);
    out.X.push_back(X[p]);
  }
  return out;
}

Dataset parse_dataset(std::istream& in, const ArealGraph& graph, bool intercept) {
  const auto rows = csv::read_rows(in, true);
  if (rows.empty()) throw ValidationError("data file is empty");
  const auto& header = rows.front().fields;
  if (header.size() < 3 || header[0] != "region" || header[1] != "disease" ||
      header[2] != "outcome") {
    throw ValidationError("data file: header must start with region,disease,outcome");
  }
  const std::size_t ncov = header.size() - 3;
  const std::size_t k = graph.size();

  struct Cell {
    double outcome;
    std::vector<std::string> cov;
    std::size_t line;
  };
  std::vector<std::string> diseases;
  std::map<std::string, std::size_t> disease_index;
  std::vector<std::vector<std::optional<Cell>>> cells;
  std::vector<std::string> unknown_regions;

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = "data file line " + std::to_string(row.line);
    if (row.fields.size() != header.size()) {
      throw ValidationError(where + ": expected " + std::to_string(header.size()) + " fields");
    }
    const auto region = graph.index_of(row.fields[0]);
    if (!region) {
      unknown_regions.push_back(row.fields[0]);
      continue;
    }
    const std::string& disease = row.fields[1];
    if (disease.empty()) throw ValidationError(where + ": empty disease label");
    auto [it, inserted] = disease_index.emplace(disease, diseases.size());
    if (inserted) {
      diseases.push_back(disease);
      cells.emplace_back(k);
    }
    auto& slot = cells[it->second][*region];
    if (slot) {
      throw ValidationError(where + ": duplicate row for region '" + row.fields[0] +
                            "' and disease '" + disease + "'");
    }
    Cell cell{csv::parse_double(row.fields[2], where + " outcome"),
              {row.fields.begin() + 3, row.fields.end()}, row.line};
    slot = std::move(cell);
  }
  if (!unknown_regions.empty()) {
    std::string list;
    for (const auto& l : unknown_regions) list += (list.empty() ? "" : ", ") + l;
    throw ValidationError("data file: region labels not in adjacency graph: " + list);
  }
  if (diseases.empty()) throw ValidationError("data file has no data rows");

  Dataset data;
  data.region_labels = graph.labels();
  data.disease_labels = diseases;
  for (std::size_t i = 0; i < diseases.size(); ++i) {
    std::vector<std::string> missing;
    for (std::size_t j = 0; j < k; ++j) {
      if (!cells[i][j]) missing.push_back(graph.labels()[j]);
    }
    if (!missing.empty()) {
      std::string list;
      for (const auto& l : missing) list += (list.empty() ? "" : ", ") + l;
      throw ValidationError("data file: disease '" + diseases[i] +
                            "' has no row for regions: " + list);
    }
    // Covariates absent for the whole disease are trailing empty columns.
    std::size_t used = ncov;
    while (used > 0 && std::all_of(cells[i].begin(), cells[i].end(), [&](const auto& c) {
             return c->cov[used - 1].empty();
           })) {
      --used;
    }
    Eigen::VectorXd y(static_cast<Eigen::Index>(k));
    const std::size_t off = intercept ? 1 : 0;
    Eigen::MatrixXd x(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(used + off));
    for (std::size_t j = 0; j < k; ++j) {
      const auto& c = *cells[i][j];
      const std::string where = "data file line " + std::to_string(c.line);
      y[static_cast<Eigen::Index>(j)] = c.outcome;
      if (intercept) x(static_cast<Eigen::Index>(j), 0) = 1.0;
      for (std::size_t t = 0; t < ncov; ++t) {
        if (t < used) {
          if (c.cov[t].empty()) throw ValidationError(where + ": incomplete row (empty " + header[3 + t] + ")");
          x(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(t + off)) =
              csv::parse_double(c.cov[t], where + " " + header[3 + t]);
        } else if (!c.cov[t].empty()) {
          throw ValidationError(where + ": incomplete row");
        }
      }
    }
    data.y.push_back(std::move(y));
    data.X.push_back(std::move(x));
    data.covariate_names.emplace_back(header.begin() + 3,
                                      header.begin() + 3 + static_cast<std::ptrdiff_t>(used));
  }
  data.validate();
  return data;
}

Dataset load_dataset(const std::filesystem::path& path, const ArealGraph& graph, bool intercept) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open data file " + path.string());
  return parse_dataset(in, graph, intercept);
}

void write_dataset(std::ostream& out, const Dataset& data, bool intercept) {
  const std::size_t off = intercept ? 1 : 0;
  std::size_t widest = 0;
  for (std::size_t i = 1; i < data.q(); ++i) {
    if (data.p(i) > data.p(widest)) widest = i;
  }
  const std::size_t ncov = data.p(widest) - off;
  std::vector<std::string> names;
  bool shared = !data.covariate_names.empty() && data.covariate_names[widest].size() == ncov;
  if (shared) {
    names = data.covariate_names[widest];
    for (const auto& n : data.covariate_names) {
      shared = shared && n.size() <= names.size() && std::equal(n.begin(), n.end(), names.begin());
    }
  }
  if (!shared) {
    names.clear();
    for (std::size_t t = 0; t < ncov; ++t) names.push_back("x" + std::to_string(t + 1));
  }
  out << "region,disease,outcome";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < data.q(); ++i) {
    for (std::size_t j = 0; j < data.k(); ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      out << data.region_labels[j] << ',' << data.disease_labels[i] << ','
          << csv::format_double(data.y[i][jj]);
      for (std::size_t t = 0; t < ncov; ++t) {
        out << ',';
        if (t + off < data.p(i)) out << csv::format_double(data.X[i](jj, static_cast<Eigen::Index>(t + off)));
      }
      out << '\n';
    }
  }
}

// ---------------------------------------------------------------- priors

void PriorSpec::validate() const {
  const double positives[] = {a_tau, b_tau, a_sigma, b_sigma, var_beta, var_eta};
  for (double v : positives) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ValidationError("prior shapes, rates and variances must be positive and finite");
    }
  }
  if (!std::isfinite(mu_beta) || !std::isfinite(mu_eta)) {
    throw ValidationError("prior means must be finite");
  }
}

PriorSpec PriorSpec::simulation() { return PriorSpec{}; }

PriorSpec PriorSpec::data_analysis() {
  PriorSpec p;
  p.a_tau = 2.0;
  p.b_tau = 0.1;
  p.a_sigma = 2.0;
  p.b_sigma = 1.0;
  return p;
}

// ---------------------------------------------------------------- state

bool ParamState::in_support() const {
  for (Eigen::Index i = 0; i < tau.size(); ++i) {
    if (!(sigma2[i] > 0.0) || !std::isfinite(sigma2[i])) return false;
    if (!(tau[i] > 0.0) || !std::isfinite(tau[i])) return false;
    if (!(rho[i] > 0.0 && rho[i] < 1.0)) return false;
  }
  return true;
}

void check_permutation(const std::vector<std::size_t>& ordering, std::size_t q) {
  if (ordering.size() != q) {
    throw ValidationError("ordering has " + std::to_string(ordering.size()) +
                          " entries for " + std::to_string(q) + " diseases");
  }
  std::vector<char> seen(q, 0);
  for (std::size_t v : ordering) {
    if (v >= q || seen[v]) throw ValidationError("ordering is not a permutation");
    seen[v] = 1;
  }
}

ModelSpec::ModelSpec(std::shared_ptr<const ArealGraph> graph, std::shared_ptr<const Dataset> data,
                     PriorSpec prior, std::vector<std::size_t> ordering)
    : graph_(std::move(graph)),
      data_(std::move(data)),
      prior_(prior),
      ordering_(std::move(ordering)) {
  if (!graph_ || !data_) throw ValidationError("model spec needs a graph and a dataset");
  prior_.validate();
  if (data_->k() != graph_->size()) {
    throw ValidationError("dataset region count does not match the graph");
  }
  for (std::size_t j = 0; j < graph_->size(); ++j) {
    if (data_->region_labels[j] != graph_->labels()[j]) {
      throw ValidationError("dataset region order does not match the graph at '" +
                            graph_->labels()[j] + "'");
    }
  }
  ordered_ = data_->reordered(ordering_);
}

JointPrecision ModelSpec::joint(const ParamState& s) const {
  return JointPrecision(graph_, s.tau, s.rho, s.eta);
}

// ---------------------------------------------------------------- densities

Eigen::VectorXd linear_predictor(const ParamState& s, const Dataset& data) {
  const auto k = static_cast<Eigen::Index>(data.k());
  Eigen::VectorXd out(k * static_cast<Eigen::Index>(data.q()));
  for (std::size_t i = 0; i < data.q(); ++i) {
    out.segment(static_cast<Eigen::Index>(i) * k, k) = data.X[i] * s.beta[i];
  }
  return out;
}

Eigen::MatrixXd pointwise_loglik(const ParamState& s, const Dataset& data) {
  const std::size_t q = data.q();
  const std::size_t k = data.k();
  if (s.beta.size() != q || static_cast<std::size_t>(s.sigma2.size()) != q ||
      static_cast<std::size_t>(s.w.size()) != q * k) {
    throw ValidationError("pointwise log-likelihood: state shape does not match data");
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < q; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    if (!s.beta[i].allFinite() || !std::isfinite(s.sigma2[ii])) {
      throw ValidationError("pointwise log-likelihood: non-finite parameters");
    }
    const Eigen::VectorXd mean = data.X[i] * s.beta[i];
    for (std::size_t j = 0; j < k; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      out(ii, jj) = normal_log_density(data.y[i][jj],
                                       mean[jj] + s.w[static_cast<Eigen::Index>(i * k + j)],
                                       s.sigma2[ii]);
    }
  }
  if (!out.allFinite()) throw ValidationError("pointwise log-likelihood: non-finite result");
  return out;
}

double log_prior_w(const ParamState& s, const ModelSpec& spec) {
  const JointPrecision joint = spec.joint(s);
  const double n = static_cast<double>(joint.dim());
  return 0.5 * joint.log_det() - 0.5 * joint.quad_form(s.w) - 0.5 * n * kLog2Pi;
}

double log_prior_theta(const ParamState& s, const PriorSpec& prior) {
  if (!s.in_support()) return -INFINITY;
  double lp = 0.0;
  for (std::size_t i = 0; i < s.q(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (Eigen::Index c = 0; c < s.beta[i].size(); ++c) {
      lp += normal_log_density(s.beta[i][c], prior.mu_beta, prior.var_beta);
    }
    lp += inverse_gamma_log_density(s.sigma2[ii], prior.a_sigma, prior.b_sigma);
    lp += gamma_log_density(s.tau[ii], prior.a_tau, prior.b_tau);
    // Uniform(0, 1) on rho contributes log 1.
  }
  for (std::size_t i = 1; i < s.q(); ++i) {
    for (std::size_t ip = 0; ip < i; ++ip) {
      lp += normal_log_density(s.eta.eta0(i, ip), prior.mu_eta, prior.var_eta);
      lp += normal_log_density(s.eta.eta1(i, ip), prior.mu_eta, prior.var_eta);
    }
  }
  return lp;
}

double log_posterior_kernel(const ParamState& s, const ModelSpec& spec) {
  if (!s.in_support()) return -INFINITY;
  return pointwise_loglik(s, spec.data()).sum() + log_prior_w(s, spec) +
         log_prior_theta(s, spec.prior());
}

double integrated_loglik(const ParamState& s, const ModelSpec& spec) {
  const Dataset& data = spec.data();
  const JointPrecision joint = spec.joint(s);
  const auto k = static_cast<Eigen::Index>(data.k());
  const auto n = static_cast<Eigen::Index>(joint.dim());

  const Eigen::VectorXd r = [&] {
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < data.q(); ++i) y.segment(static_cast<Eigen::Index>(i) * k, k) = data.y[i];
    return Eigen::VectorXd(y - linear_predictor(s, data));
  }();
  Eigen::VectorXd sd(n);
  for (std::size_t i = 0; i < data.q(); ++i) {
    sd.segment(static_cast<Eigen::Index>(i) * k, k).setConstant(std::sqrt(s.sigma2[static_cast<Eigen::Index>(i)]));
  }

  const Eigen::MatrixXd qw = joint.dense();
  // I + S^{1/2} Q S^{1/2}
  Eigen::MatrixXd m = sd.asDiagonal() * qw * sd.asDiagonal();
  m.diagonal().array() += 1.0;
  const auto llt = cholesky_with_jitter(m, "integrated likelihood covariance");
  const Eigen::VectorXd rhs = sd.cwiseProduct(joint.matvec(r));
  const double quad = r.cwiseQuotient(sd).dot(llt.solve(rhs));
  const double log_det_cov = log_det_from_llt(llt) - joint.log_det();
  const double value = -0.5 * (static_cast<double>(n) * kLog2Pi + log_det_cov + quad);
  if (!std::isfinite(value)) throw NumericalError("integrated likelihood is not finite");
  return value;
}

}  // namespace mdagar
