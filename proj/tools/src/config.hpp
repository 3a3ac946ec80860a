#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mdagar/errors.hpp"
#include "mdagar/evidence.hpp"
#include "mdagar/gibbs.hpp"
#include "mdagar/model.hpp"

namespace mdagar::cli {

/// Config problem located by a dotted field path and, when known, a line.
class ConfigError : public ValidationError {
 public:
  ConfigError(const std::string& source, std::size_t line, const std::string& field,
              const std::string& message);
  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

struct SimulateSection {
  /// "bivariate", "three-disease" or "order-recovery".
  std::string design = "bivariate";
  /// "low", "medium", "high"; ignored when `eta` is set.
  std::string regime = "low";
  std::optional<std::pair<double, double>> eta;
  /// 1-based true ordering for the three-disease design.
  std::vector<std::size_t> true_order = {1, 2, 3};
  std::size_t n_replicates = 0;  // 0: design default (85 or 50)
  /// "exponential" or "dagar".
  std::string truth = "exponential";
  /// `label,x,y`; needed with --adjacency and the exponential truth.
  std::string coordinates;
  /// Order recovery only.
  std::size_t replicates_per_order = 10;
};

struct RunConfig {
  std::string prior_preset = "simulation";
  PriorSpec prior = PriorSpec::simulation();
  ChainConfig chain;
  std::size_t n_chains = 2;
  BridgeConfig bridge;
  bool intercept = true;
  SimulateSection simulate;
  /// Directory of the config file, for resolving relative paths.
  std::filesystem::path base_dir;
};

/// Parses the JSON config. Every key is optional; unknown keys are errors.
RunConfig parse_config(const std::string& text, const std::string& source = "config");
RunConfig load_config(const std::filesystem::path& path);

/// "2,1,3" -> {1, 0, 2}.
std::vector<std::size_t> parse_order_flag(const std::string& text);

}  // namespace mdagar::cli
