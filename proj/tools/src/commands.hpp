#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mdagar/gibbs.hpp"

namespace mdagar::cli {

struct Options {
  std::string adjacency;
  std::string data;
  std::string config;
  std::string order;  // "2,1,3"
  std::size_t jobs = 1;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = ".";
};

int cmd_simulate(const Options& opt);
int cmd_fit(const Options& opt);
int cmd_compare_orders(const Options& opt);
int cmd_report(const Options& opt);

/// Concatenates chains that share a layout.
PosteriorSamples pool_chains(const std::vector<PosteriorSamples>& chains);

}  // namespace mdagar::cli
