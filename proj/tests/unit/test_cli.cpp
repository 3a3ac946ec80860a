#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "manifest.hpp"
#include "mdagar/errors.hpp"
#include "mdagar/simulation.hpp"

using namespace mdagar;
using namespace mdagar::cli;
namespace fs = std::filesystem;

namespace {

std::string config_error(const std::string& text) {
  try {
    parse_config(text, "run.json");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mdagar_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config defaults and overrides") {
    const RunConfig def = parse_config("{}");
    CHECK(def.chain.n_iter == 6000);
    CHECK(def.n_chains == 2);
    CHECK(def.prior.b_tau == 8.0);

    const RunConfig c = parse_config(R"({
      // comment lines are fine
      "prior": {"preset": "data-analysis", "var_eta": 1000},
      "chain": {"n_iter": 300, "n_burnin": 100, "rw_step": [0.5], "n_chains": 1},
      "bridge": {"split": 0.4},
      "data": {"intercept": false},
      "simulate": {"design": "three-disease", "true_order": [2, 1, 3]}
    })");
    CHECK(c.prior.b_tau == 0.1);
    CHECK(c.prior.var_eta == 1000);
    CHECK(c.chain.n_iter == 300);
    CHECK(c.chain.rw_step == std::vector<double>{0.5});
    CHECK(c.bridge.split == 0.4);
    CHECK_FALSE(c.intercept);
    CHECK(c.simulate.true_order == std::vector<std::size_t>{2, 1, 3});
  }

  TEST_CASE("config errors carry line and field") {
    CHECK(config_error("{\n \"chain\": {\n  \"n_iter\": 10,\n  \"bogus\": 1\n }\n}") ==
          "run.json:4: field 'chain.bogus': unknown key");
    CHECK(config_error("{\n\"chain\": {\"n_iter\": \"many\"}}").find("field 'chain.n_iter'") != std::string::npos);
    CHECK(config_error("{\n\"chain\": {\"n_iter\": 10, \"n_burnin\": 20}}").find("chain") != std::string::npos);
    CHECK(config_error("{\n\"prior\": {\"a_tau\": -1}}").find("prior") != std::string::npos);
    CHECK(config_error("{\n\"simulate\": {\"regime\": \"extreme\"}}").find("must be one of") != std::string::npos);
    CHECK(config_error("{\n\n\"chain\": [1,}").rfind("run.json:3", 0) == 0);
    CHECK(config_error("{\"simulate\": {\"true_order\": [0, 1, 2]}}").find("1-based") != std::string::npos);
  }

  TEST_CASE("order flag") {
    CHECK(parse_order_flag("2,1,3") == std::vector<std::size_t>{1, 0, 2});
    CHECK_THROWS_AS(parse_order_flag("0,1"), ValidationError);
    CHECK_THROWS_AS(parse_order_flag("a"), ValidationError);
    CHECK_THROWS_AS(parse_order_flag(""), ValidationError);
  }

  TEST_CASE("sha256") {
    CHECK(sha256_text("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    const fs::path dir = scratch("sha");
    std::ofstream(dir / "f.txt") << "abc";
    CHECK(sha256_file(dir / "f.txt") == sha256_text("abc"));
  }

  TEST_CASE("fit and compare-orders on a small simulated dataset") {
    const fs::path dir = scratch("pipeline");
    std::ofstream(dir / "run.json") << R"({"chain": {"n_iter": 400, "n_burnin": 150},
      "simulate": {"design": "bivariate", "regime": "high", "n_replicates": 1},
      "data": {"intercept": false}})";
    Options sim;
    sim.config = (dir / "run.json").string();
    sim.out_dir = dir / "sim";
    sim.seed = 4;
    CHECK(cmd_simulate(sim) == 0);
    CHECK(fs::exists(dir / "sim" / "dataset_001.csv"));
    CHECK(fs::exists(dir / "sim" / "truth.json"));

    Options fit;
    fit.adjacency = (dir / "sim" / "adjacency.txt").string();
    fit.data = (dir / "sim" / "dataset_001.csv").string();
    fit.config = sim.config;
    fit.order = "2,1";
    fit.jobs = 2;
    fit.out_dir = dir / "fit";
    CHECK(cmd_fit(fit) == 0);
    std::ifstream dj(dir / "fit" / "diagnostics.json");
    const auto diag = nlohmann::json::parse(dj);
    for (const char* key : {"waic", "lpd_hat", "p_waic", "d", "g", "p"}) CHECK(diag.contains(key));
    CHECK(diag["ordering"] == "[2 1]");
    CHECK(diag["rhat"].contains("tau[1]"));

    Options cmp = fit;
    cmp.order.clear();
    cmp.out_dir = dir / "cmp";
    CHECK(cmd_compare_orders(cmp) == 0);
    std::ifstream ev(dir / "cmp" / "evidence.csv");
    std::string header;
    std::getline(ev, header);
    CHECK(header == "model_index,ordering,log_ml,mc_iterations,posterior_prob");

    std::ifstream mj(dir / "cmp" / "manifest.json");
    const auto manifest = nlohmann::json::parse(mj);
    CHECK(manifest["command"] == "compare-orders");
    CHECK(manifest["inputs"].size() == 2);
    CHECK(manifest["config_sha256"].get<std::string>().size() == 64);

    Options rep;
    rep.out_dir = dir / "cmp";
    CHECK(cmd_report(rep) == 0);
    CHECK(fs::exists(dir / "cmp" / "report.txt"));
  }

  TEST_CASE("validation failures") {
    const fs::path dir = scratch("invalid");
    Options o;
    o.out_dir = dir;
    CHECK_THROWS_AS(cmd_fit(o), ValidationError);
    CHECK_THROWS_AS(cmd_simulate(o), ValidationError);
    CHECK_THROWS_AS(cmd_report(o), ValidationError);
    std::ofstream(dir / "adj.txt") << "regions: a,b\na,b\n";
    std::ofstream(dir / "data.csv") << "region,disease,outcome\na,x,1\nb,x,2\n";
    o.adjacency = (dir / "adj.txt").string();
    o.data = (dir / "data.csv").string();
    o.order = "1,2";
    CHECK_THROWS_AS(cmd_fit(o), ValidationError);
  }
}
