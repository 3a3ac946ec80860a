#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "config.hpp"
#include "manifest.hpp"
#include "mdagar/csv.hpp"
#include "mdagar/diagnostics.hpp"
#include "mdagar/errors.hpp"
#include "mdagar/evidence.hpp"
#include "mdagar/graph.hpp"
#include "mdagar/parallel.hpp"
#include "mdagar/simulation.hpp"

namespace mdagar::cli {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

struct Inputs {
  RunConfig cfg;
  std::shared_ptr<const ArealGraph> graph;
  std::shared_ptr<const Dataset> data;
};

RunConfig config_or_defaults(const Options& opt, Manifest& manifest) {
  if (opt.config.empty()) return RunConfig{};
  manifest.set_config(opt.config);
  return load_config(opt.config);
}

Inputs load_inputs(const Options& opt, Manifest& manifest) {
  if (opt.adjacency.empty()) throw ValidationError("--adjacency is required");
  if (opt.data.empty()) throw ValidationError("--data is required");
  Inputs in;
  in.cfg = config_or_defaults(opt, manifest);
  in.graph = std::make_shared<const ArealGraph>(load_adjacency(opt.adjacency));
  manifest.add_input("adjacency", opt.adjacency);
  in.data = std::make_shared<const Dataset>(load_dataset(opt.data, *in.graph, in.cfg.intercept));
  manifest.add_input("data", opt.data);
  return in;
}

fs::path prepare_out_dir(const Options& opt) {
  fs::create_directories(opt.out_dir);
  return opt.out_dir;
}

std::ofstream open_out(const fs::path& path, Manifest& manifest) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  manifest.add_output(path);
  return out;
}

std::string ordering_label(const std::vector<std::size_t>& ordering, const Dataset& data) {
  std::string s;
  for (std::size_t i = 0; i < ordering.size(); ++i) {
    s += (i ? " > " : "") + data.disease_labels[ordering[i]];
  }
  return s;
}

std::vector<PosteriorSamples> run_chains(const ModelSpec& spec, const RunConfig& cfg,
                                         std::uint64_t seed, std::size_t jobs) {
  std::vector<PosteriorSamples> chains(cfg.n_chains);
  parallel_for(cfg.n_chains, jobs, [&](std::size_t c) {
    ChainConfig chain = cfg.chain;
    chain.seed = derive_seed(seed, c);
    chains[c] = run_chain(spec, chain);
  });
  return chains;
}

ojson fit_diagnostics(const ModelSpec& spec, const std::vector<PosteriorSamples>& chains,
                      const PosteriorSamples& pooled, std::uint64_t seed) {
  const Dataset& data = spec.data();
  const WaicResult w = waic(pointwise_loglik_draws(pooled, data));
  Rng rng(derive_seed(seed, 0xD5C0));
  const DScoreResult d = d_score(stacked_outcomes(data), replicate_draws(pooled, data, rng));
  ojson j;
  j["ordering"] = format_ordering(spec.ordering());
  j["waic"] = w.waic;
  j["lpd_hat"] = w.lpd_hat;
  j["p_waic"] = w.p_waic;
  j["d"] = d.d;
  j["g"] = d.g;
  j["p"] = d.p;
  j["draws"] = pooled.size();
  return j;
}

ojson chain_summary(const std::vector<PosteriorSamples>& chains, const ModelSpec& spec,
                    std::uint64_t seed) {
  ojson out = ojson::array();
  for (std::size_t c = 0; c < chains.size(); ++c) {
    ojson chain;
    chain["chain"] = c + 1;
    chain["seed"] = derive_seed(seed, c);
    ojson acc;
    for (std::size_t pos = 0; pos < spec.q(); ++pos) {
      acc["rho[" + std::to_string(spec.ordering()[pos] + 1) + "]"] = chains[c].acceptance[pos];
    }
    chain["gamma_acceptance"] = acc;
    out.push_back(chain);
  }
  return out;
}

ojson rhat_table(const std::vector<PosteriorSamples>& chains) {
  ojson out = ojson::object();
  const auto& names = chains.front().layout.names();
  for (std::size_t c = 0; c < names.size(); ++c) {
    if (names[c].rfind("w[", 0) == 0) continue;
    std::vector<Eigen::VectorXd> cols;
    for (const auto& ch : chains) cols.emplace_back(ch.draws.col(idx(c)));
    if (cols.front().size() < 4) continue;
    const double r = split_rhat(cols);
    out[names[c]] = std::isfinite(r) ? ojson(r) : ojson(nullptr);
  }
  return out;
}

void write_json(const fs::path& path, const ojson& j, Manifest& manifest) {
  auto out = open_out(path, manifest);
  out << j.dump(2) << '\n';
}

}  // namespace

PosteriorSamples pool_chains(const std::vector<PosteriorSamples>& chains) {
  if (chains.empty()) throw ValidationError("no chains to pool");
  PosteriorSamples out;
  out.layout = chains.front().layout;
  Eigen::Index rows = 0;
  for (const auto& c : chains) {
    if (c.draws.cols() != chains.front().draws.cols()) throw ValidationError("chains disagree in layout");
    rows += c.draws.rows();
  }
  out.draws.resize(rows, chains.front().draws.cols());
  Eigen::Index at = 0;
  for (const auto& c : chains) {
    out.draws.middleRows(at, c.draws.rows()) = c.draws;
    at += c.draws.rows();
    out.lp_trace.insert(out.lp_trace.end(), c.lp_trace.begin(), c.lp_trace.end());
  }
  out.acceptance = chains.front().acceptance;
  out.final_step = chains.front().final_step;
  return out;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const Options& opt) {
  if (opt.config.empty()) throw ValidationError("simulate requires --config");
  Manifest manifest("simulate", opt.seed);
  manifest.set_jobs(opt.jobs);
  const RunConfig cfg = config_or_defaults(opt, manifest);
  const SimulateSection& sim = cfg.simulate;
  const fs::path dir = prepare_out_dir(opt);

  Geometry geometry;
  if (opt.adjacency.empty()) {
    geometry = grid_minus_corner();
    auto adj = open_out(dir / "adjacency.txt", manifest);
    write_adjacency(adj, *geometry.graph);
    auto coords = open_out(dir / "coordinates.csv", manifest);
    write_coordinates(coords, *geometry.graph, geometry.coords);
  } else {
    geometry.graph = std::make_shared<const ArealGraph>(load_adjacency(opt.adjacency));
    manifest.add_input("adjacency", opt.adjacency);
    const bool needs_coords = sim.truth == "exponential";
    if (sim.coordinates.empty()) {
      if (needs_coords) {
        throw ValidationError("simulate: the exponential truth needs simulate.coordinates when --adjacency is given");
      }
    } else {
      fs::path p = sim.coordinates;
      if (p.is_relative()) p = cfg.base_dir / p;
      geometry.coords = load_coordinates(p, *geometry.graph);
      manifest.add_input("coordinates", p);
    }
  }

  if (sim.design == "order-recovery") {
    RecoveryConfig rc;
    rc.replicates = sim.replicates_per_order;
    rc.chain = cfg.chain;
    rc.bridge = cfg.bridge;
    rc.prior = cfg.prior;
    rc.jobs = opt.jobs;
    rc.seed = opt.seed;
    const RecoveryResult result = run_order_recovery(geometry, rc);
    {
      auto out = open_out(dir / "recovery_table.csv", manifest);
      write_recovery_table(out, result);
    }
    {
      auto out = open_out(dir / "recovery_log_ml.csv", manifest);
      out << "true_model,replicate";
      for (const auto& o : result.orderings) out << ',' << format_ordering(o);
      out << '\n';
      for (Eigen::Index row = 0; row < result.log_ml.rows(); ++row) {
        const auto t = static_cast<std::size_t>(row) / rc.replicates;
        out << format_ordering(result.orderings[t]) << ',' << (static_cast<std::size_t>(row) % rc.replicates + 1);
        for (Eigen::Index m = 0; m < result.log_ml.cols(); ++m) out << ',' << csv::format_double(result.log_ml(row, m));
        out << '\n';
      }
    }
    {
      auto out = open_out(dir / "recovery_failures.csv", manifest);
      out << "true_model,replicate,fitted_model,message\n";
      for (const auto& f : result.failures) {
        std::string msg = f.message;
        std::replace(msg.begin(), msg.end(), ',', ';');
        out << format_ordering(result.orderings[f.true_model]) << ',' << f.replicate + 1 << ','
            << format_ordering(result.orderings[f.fitted_model]) << ',' << msg << '\n';
      }
    }
    std::cout << "order recovery: " << result.failures.size() << " failed fits\n";
    write_recovery_table(std::cout, result);
    manifest.write(dir / "manifest.json");
    return 0;
  }

  GeneratorConfig gen;
  if (sim.design == "bivariate") {
    EtaRegime regime;
    for (const auto& r : standard_eta_regimes()) {
      if (r.name == sim.regime) regime = r;
    }
    if (sim.eta) regime = {"custom", sim.eta->first, sim.eta->second};
    gen = bivariate_config(geometry, regime);
  } else {
    std::vector<std::size_t> order;
    for (std::size_t v : sim.true_order) order.push_back(v - 1);
    gen = three_disease_config(geometry, order);
  }
  gen.truth = sim.truth == "exponential" ? TruthKind::kExponential : TruthKind::kDagar;
  if (sim.n_replicates > 0) gen.n_replicates = sim.n_replicates;
  gen.seed = opt.seed;
  const Simulation result = simulate(gen);

  const std::size_t k = geometry.graph->size();
  const int width = gen.n_replicates >= 1000 ? 4 : 3;
  for (std::size_t r = 0; r < result.replicates.size(); ++r) {
    std::ostringstream tag;
    tag << std::setw(width) << std::setfill('0') << r + 1;
    const auto& rep = result.replicates[r];
    {
      auto out = open_out(dir / ("dataset_" + tag.str() + ".csv"), manifest);
      write_dataset(out, rep.data, false);
    }
    auto out = open_out(dir / ("truth_w_" + tag.str() + ".csv"), manifest);
    out << "region,disease,w\n";
    for (std::size_t d = 0; d < gen.q(); ++d) {
      for (std::size_t j = 0; j < k; ++j) {
        out << geometry.graph->labels()[j] << ',' << rep.data.disease_labels[d] << ','
            << csv::format_double(rep.w[idx(d * k + j)]) << '\n';
      }
    }
  }

  ojson truth;
  truth["design"] = sim.design;
  truth["truth"] = sim.truth;
  truth["n_replicates"] = gen.n_replicates;
  truth["order"] = format_ordering(gen.order);
  for (std::size_t d = 0; d < gen.q(); ++d) {
    const std::string key = std::to_string(d + 1);
    truth["beta"][key] = std::vector<double>(gen.beta[d].data(), gen.beta[d].data() + gen.beta[d].size());
    truth["sigma2"][key] = gen.sigma2[idx(d)];
  }
  for (std::size_t pos = 0; pos < gen.q(); ++pos) {
    const std::string key = std::to_string(gen.order[pos] + 1);
    truth["tau"][key] = gen.tau[idx(pos)];
    truth["rho"][key] = gen.rho[idx(pos)];
    for (std::size_t ip = 0; ip < pos; ++ip) {
      const std::string pair = key + "," + std::to_string(gen.order[ip] + 1);
      truth["eta0"][pair] = gen.eta.eta0(pos, ip);
      truth["eta1"][pair] = gen.eta.eta1(pos, ip);
    }
  }
  if (gen.q() == 2) {
    const Eigen::VectorXd corr = build_truth(gen).within_region_correlation(1, 0);
    truth["within_region_correlation"] = {{"mean", corr.mean()},
                                          {"min", corr.minCoeff()},
                                          {"max", corr.maxCoeff()}};
  }
  write_json(dir / "truth.json", truth, manifest);
  std::cout << "wrote " << result.replicates.size() << " datasets to " << dir.string() << '\n';
  manifest.write(dir / "manifest.json");
  return 0;
}

// ---------------------------------------------------------------- fit

int cmd_fit(const Options& opt) {
  Manifest manifest("fit", opt.seed);
  manifest.set_jobs(opt.jobs);
  const Inputs in = load_inputs(opt, manifest);
  std::vector<std::size_t> ordering(in.data->q());
  std::iota(ordering.begin(), ordering.end(), std::size_t{0});
  if (!opt.order.empty()) ordering = parse_order_flag(opt.order);
  const ModelSpec spec(in.graph, in.data, in.cfg.prior, ordering);
  const fs::path dir = prepare_out_dir(opt);

  const auto chains = run_chains(spec, in.cfg, opt.seed, opt.jobs);
  for (std::size_t c = 0; c < chains.size(); ++c) {
    auto out = open_out(dir / ("samples_chain" + std::to_string(c + 1) + ".csv"), manifest);
    write_samples_csv(out, chains[c]);
  }
  const PosteriorSamples pooled = pool_chains(chains);
  ojson diag = fit_diagnostics(spec, chains, pooled, opt.seed);
  diag["chains"] = chain_summary(chains, spec, opt.seed);
  if (chains.size() >= 2) diag["rhat"] = rhat_table(chains);
  write_json(dir / "diagnostics.json", diag, manifest);

  std::cout << "ordering " << format_ordering(ordering) << " (" << ordering_label(ordering, *in.data)
            << "): waic " << diag["waic"].get<double>() << ", D " << diag["d"].get<double>() << '\n';
  manifest.write(dir / "manifest.json");
  return 0;
}

// ---------------------------------------------------------------- compare-orders

int cmd_compare_orders(const Options& opt) {
  Manifest manifest("compare-orders", opt.seed);
  manifest.set_jobs(opt.jobs);
  const Inputs in = load_inputs(opt, manifest);
  const std::size_t q = in.data->q();
  const auto orderings = enumerate_orderings(q);
  const std::size_t t_count = orderings.size();
  const fs::path dir = prepare_out_dir(opt);

  struct Outcome {
    bool ok = false;
    BridgeEstimate est;
    Eigen::VectorXd aligned;
    ojson diag;
    std::string error;
  };
  std::vector<Outcome> outcomes(t_count);
  parallel_for(t_count, opt.jobs, [&](std::size_t m) {
    try {
      const ModelSpec spec(in.graph, in.data, in.cfg.prior, orderings[m]);
      const std::uint64_t seed = derive_seed(opt.seed, m + 1);
      RunConfig cfg = in.cfg;
      const auto chains = run_chains(spec, cfg, seed, 1);
      const PosteriorSamples pooled = pool_chains(chains);
      BridgeConfig bridge = cfg.bridge;
      bridge.seed = derive_seed(seed, 0xB41D);
      outcomes[m].est = bridge_estimate(spec, pooled, bridge);
      outcomes[m].aligned = aligned_posterior_mean(pooled);
      outcomes[m].diag = fit_diagnostics(spec, chains, pooled, seed);
      outcomes[m].diag["chains"] = chain_summary(chains, spec, seed);
      outcomes[m].ok = true;
    } catch (const Error& e) {
      outcomes[m].error = e.what();
    }
  });

  std::vector<double> log_ml(t_count, -INFINITY);
  std::size_t ok = 0;
  for (std::size_t m = 0; m < t_count; ++m) {
    if (outcomes[m].ok) {
      log_ml[m] = outcomes[m].est.log_ml;
      ++ok;
    } else {
      std::cerr << "ordering " << format_ordering(orderings[m]) << " failed: " << outcomes[m].error << '\n';
    }
  }
  if (ok == 0) throw NumericalError("compare-orders: every ordering failed");
  const ModelPosterior post = posterior_model_probs(log_ml);

  {
    auto out = open_out(dir / "evidence.csv", manifest);
    out << "model_index,ordering,log_ml,mc_iterations,posterior_prob\n";
    for (std::size_t m = 0; m < t_count; ++m) {
      out << m + 1 << ',' << format_ordering(orderings[m]) << ','
          << (outcomes[m].ok ? csv::format_double(outcomes[m].est.log_ml) : "nan") << ','
          << (outcomes[m].ok ? outcomes[m].est.n_iterations : 0) << ','
          << csv::format_double(post.posterior[m]) << '\n';
    }
  }

  ojson models = ojson::array();
  for (std::size_t m = 0; m < t_count; ++m) {
    ojson j = outcomes[m].ok ? outcomes[m].diag : ojson::object();
    j["model_index"] = m + 1;
    j["ordering"] = format_ordering(orderings[m]);
    j["diseases"] = ordering_label(orderings[m], *in.data);
    if (outcomes[m].ok) {
      j["log_ml"] = outcomes[m].est.log_ml;
      j["log_ml_mc_se"] = outcomes[m].est.mc_se;
      j["bridge_converged"] = outcomes[m].est.converged;
    } else {
      j["error"] = outcomes[m].error;
    }
    j["posterior_prob"] = post.posterior[m];
    models.push_back(j);
  }
  write_json(dir / "model_diagnostics.json", models, manifest);

  Eigen::Index mean_len = 0;
  for (const auto& o : outcomes) {
    if (o.ok) mean_len = o.aligned.size();
  }
  std::vector<Eigen::VectorXd> means;
  for (const auto& o : outcomes) {
    means.push_back(o.ok ? o.aligned : Eigen::VectorXd::Constant(mean_len, std::nan("")));
  }
  const Eigen::VectorXd bma = bma_expectation(means, post.posterior);
  const Dataset& data = *in.data;
  const std::size_t k = data.k();
  std::size_t at = 0;
  {
    auto out = open_out(dir / "bma_beta.csv", manifest);
    out << "disease,coefficient,mean\n";
    for (std::size_t d = 0; d < q; ++d) {
      for (std::size_t c = 0; c < data.p(d); ++c) {
        std::string name;
        const std::size_t off = in.cfg.intercept ? 1 : 0;
        if (in.cfg.intercept && c == 0) {
          name = "intercept";
        } else if (!data.covariate_names.empty() && c - off < data.covariate_names[d].size()) {
          name = data.covariate_names[d][c - off];
        } else {
          name = "x" + std::to_string(c + 1 - off);
        }
        out << data.disease_labels[d] << ',' << name << ',' << csv::format_double(bma[idx(at++)]) << '\n';
      }
    }
  }
  {
    auto out = open_out(dir / "bma_w.csv", manifest);
    out << "region,disease,mean\n";
    for (std::size_t d = 0; d < q; ++d) {
      for (std::size_t j = 0; j < k; ++j) {
        out << data.region_labels[j] << ',' << data.disease_labels[d] << ','
            << csv::format_double(bma[idx(at++)]) << '\n';
      }
    }
  }

  std::size_t best = 0;
  for (std::size_t m = 1; m < t_count; ++m) {
    if (post.posterior[m] > post.posterior[best]) best = m;
  }
  std::cout << ok << " of " << t_count << " orderings fitted; most probable "
            << format_ordering(orderings[best]) << " (" << ordering_label(orderings[best], data)
            << ") with probability " << post.posterior[best] << '\n';
  manifest.write(dir / "manifest.json");
  return 0;
}

// ---------------------------------------------------------------- report

int cmd_report(const Options& opt) {
  const fs::path dir = opt.out_dir;
  if (!fs::is_directory(dir)) throw ValidationError("report: " + dir.string() + " is not a directory");
  std::ostringstream rep;
  bool any = false;

  if (fs::exists(dir / "evidence.csv")) {
    any = true;
    const auto rows = csv::read_file(dir / "evidence.csv", false);
    if (rows.empty() || rows.front().fields.size() != 5) throw ValidationError("report: malformed evidence.csv");
    struct Row {
      std::string index, ordering;
      double log_ml, prob;
    };
    std::vector<Row> table;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& f = rows[r].fields;
      if (f.size() != 5) throw ValidationError("report: evidence.csv line " + std::to_string(rows[r].line));
      const std::string where = "evidence.csv line " + std::to_string(rows[r].line);
      table.push_back({f[0], f[1], f[2] == "nan" ? std::nan("") : csv::parse_double(f[2], where),
                       csv::parse_double(f[4], where)});
    }
    std::stable_sort(table.begin(), table.end(), [](const Row& a, const Row& b) { return a.prob > b.prob; });
    rep << "Posterior model probabilities\n";
    rep << std::left << std::setw(7) << "model" << std::setw(16) << "ordering" << std::setw(16) << "log_ml"
        << "probability\n";
    double total = 0.0;
    for (const auto& r : table) {
      rep << std::left << std::setw(7) << r.index << std::setw(16) << r.ordering << std::setw(16)
          << std::setprecision(8) << r.log_ml << std::setprecision(6) << r.prob << '\n';
      total += r.prob;
    }
    rep << "sum of probabilities: " << std::setprecision(15) << total << "\n\n";
  }

  if (fs::exists(dir / "diagnostics.json")) {
    any = true;
    std::ifstream in(dir / "diagnostics.json");
    const auto j = nlohmann::json::parse(in);
    rep << "Fit " << j.value("ordering", std::string("?")) << '\n' << std::setprecision(8);
    for (const char* key : {"waic", "lpd_hat", "p_waic", "d", "g", "p"}) {
      rep << "  " << std::left << std::setw(8) << key << j.at(key).get<double>() << '\n';
    }
    if (j.contains("rhat")) {
      double worst = 0.0;
      std::string which;
      for (const auto& [name, v] : j["rhat"].items()) {
        if (v.is_number() && v.get<double>() > worst) {
          worst = v.get<double>();
          which = name;
        }
      }
      if (!which.empty()) rep << "  max split R-hat " << worst << " (" << which << ")\n";
    }
    rep << '\n';
  }

  if (fs::exists(dir / "recovery_table.csv")) {
    any = true;
    std::ifstream in(dir / "recovery_table.csv");
    rep << "Order recovery (rows: true ordering, columns: selected)\n" << in.rdbuf() << '\n';
  }
  if (!any) throw ValidationError("report: no evidence.csv, diagnostics.json or recovery_table.csv in " + dir.string());

  std::cout << rep.str();
  std::ofstream out(dir / "report.txt");
  out << rep.str();
  return 0;
}

}  // namespace mdagar::cli
