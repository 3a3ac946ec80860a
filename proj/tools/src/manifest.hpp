#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mdagar::cli {

/// Lowercase hex SHA-256 of a file's bytes or of a string.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_text(const std::string& text);

/// Record of one run, written as manifest.json next to the outputs.
class Manifest {
 public:
  Manifest(std::string command, std::uint64_t seed);

  void set_config(const std::filesystem::path& path);
  void add_input(const std::string& role, const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  void set_jobs(std::size_t jobs) { jobs_ = jobs; }

  void write(const std::filesystem::path& path) const;

 private:
  struct Input {
    std::string role;
    std::string path;
    std::string sha256;
  };
  std::string command_;
  std::uint64_t seed_;
  std::size_t jobs_ = 1;
  std::string config_path_;
  std::string config_digest_;
  std::vector<Input> inputs_;
  std::vector<std::string> outputs_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace mdagar::cli
