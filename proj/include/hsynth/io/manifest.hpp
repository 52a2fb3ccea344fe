#pragma once

// Run manifests. SHA-256 digests come from OpenSSL's libcrypto.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>
#include <openssl/evp.h>

#include "hsynth/io/reports.hpp"
#include "hsynth/version.hpp"

namespace hsynth::io {

class DigestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

struct Sha256 {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx{EVP_MD_CTX_new(), &EVP_MD_CTX_free};

  Sha256() {
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw DigestError("SHA-256 init failed");
  }
  void update(const void* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx.get(), data, n) != 1) throw DigestError("SHA-256 update failed");
  }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), md, &len) != 1) throw DigestError("SHA-256 final failed");
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
      out += digits[md[i] >> 4];
      out += digits[md[i] & 15];
    }
    return out;
  }
};

}  // namespace detail

inline std::string sha256_hex(std::string_view data) {
  detail::Sha256 h;
  h.update(data.data(), data.size());
  return h.hex();
}

inline std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DigestError("cannot read '" + path.string() + "'");
  detail::Sha256 h;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) h.update(buf, static_cast<std::size_t>(in.gcount()));
  return h.hex();
}

struct InputDigest {
  std::string role;  // "trace", "program", "config", ...
  std::string path;
  std::string sha256;
};

/// Bookkeeping written once per CLI run next to its outputs.
struct RunManifest {
  std::string subcommand;
  nlohmann::json config = nlohmann::json::object();
  std::string tool_version = kVersion;
  std::vector<InputDigest> inputs;
  std::vector<std::string> outputs;
  double wall_time_s = 0.0;
  std::string started_at;  // UTC, ISO 8601
  int exit_code = 0;

  void add_input(const std::string& role, const std::filesystem::path& p) {
    inputs.push_back({role, p.string(), sha256_file(p)});
  }
  void add_output(const std::filesystem::path& p) { outputs.push_back(p.string()); }
};

inline std::string utc_now_iso8601() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& d : m.inputs) inputs.push_back({{"role", d.role}, {"path", d.path}, {"sha256", d.sha256}});
  return {{"subcommand", m.subcommand}, {"config", m.config},         {"tool_version", m.tool_version},
          {"inputs", inputs},           {"outputs", m.outputs},       {"wall_time_s", m.wall_time_s},
          {"started_at", m.started_at}, {"exit_code", m.exit_code}};
}

inline RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  m.subcommand = j.at("subcommand").get<std::string>();
  m.config = j.at("config");
  m.tool_version = j.at("tool_version").get<std::string>();
  for (const auto& d : j.at("inputs"))
    m.inputs.push_back({d.at("role").get<std::string>(), d.at("path").get<std::string>(),
                        d.at("sha256").get<std::string>()});
  m.outputs = j.at("outputs").get<std::vector<std::string>>();
  m.wall_time_s = j.at("wall_time_s").get<double>();
  m.started_at = j.at("started_at").get<std::string>();
  m.exit_code = j.at("exit_code").get<int>();
  return m;
}

inline void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  write_text(path, to_json(m).dump(2) + "\n");
}

}  // namespace hsynth::io
