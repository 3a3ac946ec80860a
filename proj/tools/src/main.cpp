#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "mdagar/errors.hpp"

namespace {

constexpr int kValidation = 2;
constexpr int kNumerical = 3;

void add_common(CLI::App* sub, mdagar::cli::Options& opt, bool needs_inputs) {
  sub->add_option("--adjacency", opt.adjacency, "adjacency list file")->check(CLI::ExistingFile);
  if (needs_inputs) sub->add_option("--data", opt.data, "long-format data CSV")->check(CLI::ExistingFile);
  sub->add_option("--config", opt.config, "JSON run config")->check(CLI::ExistingFile);
  sub->add_option("--jobs", opt.jobs, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--seed", opt.seed, "master seed");
  sub->add_option("--out-dir", opt.out_dir, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multivariate DAGAR disease mapping"};
  app.set_version_flag("--version", std::string(MDAGAR_VERSION));
  app.require_subcommand(1);
  mdagar::cli::Options opt;

  auto* simulate = app.add_subcommand("simulate", "generate synthetic datasets or run an order-recovery study");
  add_common(simulate, opt, false);

  auto* fit = app.add_subcommand("fit", "fit one ordering and write draws and diagnostics");
  add_common(fit, opt, true);
  fit->add_option("--order", opt.order, "1-based disease ordering, e.g. 2,1,3");

  auto* compare = app.add_subcommand("compare-orders", "fit every ordering and average over them");
  add_common(compare, opt, true);

  auto* report = app.add_subcommand("report", "summarize an output directory");
  report->add_option("--out-dir", opt.out_dir, "directory written by fit, compare-orders or simulate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kValidation;
  }

  try {
    if (*simulate) return mdagar::cli::cmd_simulate(opt);
    if (*fit) return mdagar::cli::cmd_fit(opt);
    if (*compare) return mdagar::cli::cmd_compare_orders(opt);
    if (*report) return mdagar::cli::cmd_report(opt);
  } catch (const mdagar::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const mdagar::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
