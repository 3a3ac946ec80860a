#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mdagar::cli {

namespace {

using nlohmann::json;

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

// Locates a dotted path by finding each quoted key after the previous one.
std::size_t line_of_field(const std::string& text, const std::vector<std::string>& path) {
  std::size_t pos = 0;
  for (const auto& key : path) {
    const auto at = text.find('"' + key + '"', pos);
    if (at == std::string::npos) return 0;
    pos = at + key.size() + 2;
  }
  return path.empty() ? 0 : line_of_offset(text, pos);
}

std::string join(const std::vector<std::string>& path) {
  std::string s;
  for (const auto& p : path) s += (s.empty() ? "" : ".") + p;
  return s;
}

class Section {
 public:
  Section(const json& node, std::vector<std::string> path, const std::string& text,
          const std::string& source, std::set<std::string> allowed)
      : node_(node), path_(std::move(path)), text_(text), source_(source) {
    if (!node_.is_object()) fail("expected an object");
    for (const auto& [key, value] : node_.items()) {
      if (!allowed.count(key)) {
        auto p = path_;
        p.push_back(key);
        throw ConfigError(source_, line_of_field(text_, p), join(p), "unknown key");
      }
    }
  }

  bool has(const std::string& key) const { return node_.contains(key); }

  Section child(const std::string& key, std::set<std::string> allowed) const {
    auto p = path_;
    p.push_back(key);
    return Section(node_.at(key), p, text_, source_, std::move(allowed));
  }

  [[noreturn]] void fail(const std::string& message, const std::string& key = "") const {
    auto p = path_;
    if (!key.empty()) p.push_back(key);
    throw ConfigError(source_, line_of_field(text_, p), join(p), message);
  }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_number()) fail("expected a number", key);
    return v.get<double>();
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_boolean()) fail("expected true or false", key);
    return v.get<bool>();
  }

  std::size_t count(const std::string& key, std::size_t fallback) const {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_number_unsigned()) fail("expected a nonnegative integer", key);
    return v.get<std::size_t>();
  }

  std::string string(const std::string& key, const std::string& fallback,
                     std::set<std::string> choices = {}) const {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_string()) fail("expected a string", key);
    const std::string s = v.get<std::string>();
    if (!choices.empty() && !choices.count(s)) {
      std::string list;
      for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c;
      fail("must be one of " + list, key);
    }
    return s;
  }

  std::vector<double> numbers(const std::string& key) const {
    const json& v = node_.at(key);
    if (!v.is_array()) fail("expected an array of numbers", key);
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail("expected an array of numbers", key);
      out.push_back(e.get<double>());
    }
    return out;
  }

 private:
  const json& node_;
  std::vector<std::string> path_;
  const std::string& text_;
  const std::string& source_;
};

}  // namespace

ConfigError::ConfigError(const std::string& source, std::size_t line, const std::string& field,
                         const std::string& message)
    : ValidationError(source + (line ? ":" + std::to_string(line) : std::string()) +
                      (field.empty() ? std::string() : ": field '" + field + "'") + ": " + message),
      line_(line),
      field_(field) {}

RunConfig parse_config(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(source, line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0), "",
                      "malformed JSON (" + std::string(e.what()) + ")");
  }
  RunConfig cfg;
  const Section top(root, {}, text, source, {"prior", "chain", "bridge", "data", "simulate"});

  if (top.has("prior")) {
    const Section s = top.child("prior", {"preset", "a_tau", "b_tau", "a_sigma", "b_sigma",
                                          "mu_beta", "var_beta", "mu_eta", "var_eta"});
    cfg.prior_preset = s.string("preset", "simulation", {"simulation", "data-analysis"});
    cfg.prior = cfg.prior_preset == "simulation" ? PriorSpec::simulation() : PriorSpec::data_analysis();
    cfg.prior.a_tau = s.number("a_tau", cfg.prior.a_tau);
    cfg.prior.b_tau = s.number("b_tau", cfg.prior.b_tau);
    cfg.prior.a_sigma = s.number("a_sigma", cfg.prior.a_sigma);
    cfg.prior.b_sigma = s.number("b_sigma", cfg.prior.b_sigma);
    cfg.prior.mu_beta = s.number("mu_beta", cfg.prior.mu_beta);
    cfg.prior.var_beta = s.number("var_beta", cfg.prior.var_beta);
    cfg.prior.mu_eta = s.number("mu_eta", cfg.prior.mu_eta);
    cfg.prior.var_eta = s.number("var_eta", cfg.prior.var_eta);
    try {
      cfg.prior.validate();
    } catch (const ValidationError& e) {
      s.fail(e.what());
    }
  }

  if (top.has("chain")) {
    const Section s = top.child("chain", {"n_iter", "n_burnin", "thin", "n_chains", "rw_step",
                                          "adapt_target", "adapt_window"});
    cfg.chain.n_iter = s.count("n_iter", cfg.chain.n_iter);
    cfg.chain.n_burnin = s.count("n_burnin", cfg.chain.n_burnin);
    cfg.chain.thin = s.count("thin", cfg.chain.thin);
    cfg.n_chains = s.count("n_chains", cfg.n_chains);
    if (s.has("rw_step")) cfg.chain.rw_step = s.numbers("rw_step");
    cfg.chain.adapt_target = s.number("adapt_target", cfg.chain.adapt_target);
    cfg.chain.adapt_window = s.count("adapt_window", cfg.chain.adapt_window);
    if (cfg.n_chains == 0) s.fail("must be at least 1", "n_chains");
    try {
      cfg.chain.validate();
    } catch (const ValidationError& e) {
      s.fail(e.what());
    }
  }

  if (top.has("bridge")) {
    const Section s = top.child("bridge", {"split", "n2", "tol", "max_iter"});
    cfg.bridge.split = s.number("split", cfg.bridge.split);
    cfg.bridge.n2 = s.count("n2", cfg.bridge.n2);
    cfg.bridge.tol = s.number("tol", cfg.bridge.tol);
    cfg.bridge.max_iter = s.count("max_iter", cfg.bridge.max_iter);
    try {
      cfg.bridge.validate();
    } catch (const ValidationError& e) {
      s.fail(e.what());
    }
  }

  if (top.has("data")) {
    const Section s = top.child("data", {"intercept"});
    cfg.intercept = s.boolean("intercept", cfg.intercept);
  }

  if (top.has("simulate")) {
    const Section s = top.child("simulate", {"design", "regime", "eta", "true_order", "n_replicates",
                                             "truth", "coordinates", "replicates_per_order"});
    auto& sim = cfg.simulate;
    sim.design = s.string("design", sim.design, {"bivariate", "three-disease", "order-recovery"});
    sim.regime = s.string("regime", sim.regime, {"low", "medium", "high"});
    if (s.has("eta")) {
      const auto v = s.numbers("eta");
      if (v.size() != 2) s.fail("expected [eta0, eta1]", "eta");
      sim.eta = std::make_pair(v[0], v[1]);
    }
    if (s.has("true_order")) {
      sim.true_order.clear();
      for (double v : s.numbers("true_order")) {
        if (v < 1 || v != static_cast<double>(static_cast<std::size_t>(v))) {
          s.fail("entries must be 1-based disease numbers", "true_order");
        }
        sim.true_order.push_back(static_cast<std::size_t>(v));
      }
    }
    sim.n_replicates = s.count("n_replicates", sim.n_replicates);
    sim.truth = s.string("truth", sim.truth, {"exponential", "dagar"});
    sim.coordinates = s.string("coordinates", sim.coordinates);
    sim.replicates_per_order = s.count("replicates_per_order", sim.replicates_per_order);
    if (sim.replicates_per_order == 0) s.fail("must be at least 1", "replicates_per_order");
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig cfg = parse_config(ss.str(), path.string());
  cfg.base_dir = path.parent_path();
  return cfg;
}

std::vector<std::size_t> parse_order_flag(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t v = 0;
    const auto* first = item.data();
    const auto* last = item.data() + item.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || v == 0) {
      throw ValidationError("--order: '" + item + "' is not a 1-based disease number");
    }
    out.push_back(v - 1);
  }
  if (out.empty()) throw ValidationError("--order is empty");
  return out;
}

}  // namespace mdagar::cli
