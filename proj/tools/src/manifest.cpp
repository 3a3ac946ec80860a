#include "manifest.hpp"

#include <array>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "mdagar/errors.hpp"

#ifndef MDAGAR_VERSION
#define MDAGAR_VERSION "unknown"
#endif

namespace mdagar::cli {

namespace {

std::string digest(const void* data, std::size_t size) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data, size, md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) {
    out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return out.str();
}

}  // namespace

std::string sha256_text(const std::string& text) { return digest(text.data(), text.size()); }

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_text(ss.str());
}

Manifest::Manifest(std::string command, std::uint64_t seed)
    : command_(std::move(command)), seed_(seed), start_(std::chrono::steady_clock::now()) {}

void Manifest::set_config(const std::filesystem::path& path) {
  config_path_ = path.string();
  config_digest_ = sha256_file(path);
}

void Manifest::add_input(const std::string& role, const std::filesystem::path& path) {
  inputs_.push_back({role, path.string(), sha256_file(path)});
}

void Manifest::add_output(const std::filesystem::path& path) {
  outputs_.push_back(path.filename().string());
}

void Manifest::write(const std::filesystem::path& path) const {
  nlohmann::ordered_json j;
  j["command"] = command_;
  j["library_version"] = MDAGAR_VERSION;
  j["seed"] = seed_;
  j["jobs"] = jobs_;
  if (config_path_.empty()) {
    j["config"] = nullptr;
    j["config_sha256"] = sha256_text("defaults");
  } else {
    j["config"] = config_path_;
    j["config_sha256"] = config_digest_;
  }
  j["inputs"] = nlohmann::ordered_json::array();
  for (const auto& in : inputs_) {
    j["inputs"].push_back({{"role", in.role}, {"path", in.path}, {"sha256", in.sha256}});
  }
  j["outputs"] = outputs_;
  j["wall_clock_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace mdagar::cli
