#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>

#include "hsynth/trace.hpp"

namespace hsynth::io {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

/// Flat `key = value` text; `#` starts a comment. Duplicate keys are errors.
class KvConfig {
 public:
  static KvConfig parse(std::istream& in, const std::string& origin = "config") {
    KvConfig c;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
      ++n;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::string t = trim(line);
      if (t.empty()) continue;
      auto eq = t.find('=');
      if (eq == std::string::npos) throw ConfigError(origin + ":" + std::to_string(n) + ": expected key = value");
      std::string key = trim(t.substr(0, eq));
      std::string value = trim(t.substr(eq + 1));
      if (key.empty()) throw ConfigError(origin + ":" + std::to_string(n) + ": empty key");
      if (!c.values_.emplace(key, value).second)
        throw ConfigError(origin + ":" + std::to_string(n) + ": duplicate key '" + key + "'");
    }
    return c;
  }

  static KvConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
    auto c = parse(in, path.string());
    c.base_dir_ = path.parent_path();
    return c;
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::optional<std::string> get(const std::string& key) const {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  std::string get_or(const std::string& key, const std::string& def) const { return get(key).value_or(def); }

  std::int64_t get_int(const std::string& key, std::int64_t def) const {
    auto v = get(key);
    if (!v) return def;
    std::int64_t out = 0;
    auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || p != v->data() + v->size()) throw ConfigError(key + ": expected an integer, got '" + *v + "'");
    return out;
  }

  double get_double(const std::string& key, double def) const {
    auto v = get(key);
    if (!v) return def;
    std::size_t used = 0;
    double out = 0.0;
    try {
      out = std::stod(*v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != v->size() || v->empty()) throw ConfigError(key + ": expected a number, got '" + *v + "'");
    return out;
  }

  /// Path values are relative to the config file's directory.
  std::optional<std::filesystem::path> get_path(const std::string& key) const {
    auto v = get(key);
    if (!v) return std::nullopt;
    std::filesystem::path p(*v);
    return p.is_absolute() ? p : base_dir_ / p;
  }

  /// Keys present in the file that no get() asked for.
  std::set<std::string> unused() const {
    std::set<std::string> out;
    for (const auto& [k, v] : values_)
      if (!used_.count(k)) out.insert(k);
    return out;
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
  std::filesystem::path base_dir_;
};

/// "<bytes>" or "<decimal>%" of the footprint, floored to whole bytes with
/// exact decimal arithmetic.
inline Bytes parse_capacity(std::string_view spec, Bytes footprint) {
  std::string s = trim(spec);
  if (s.empty()) throw ConfigError("capacity is empty");
  bool percent = s.back() == '%';
  if (percent) s.pop_back();
  __int128 num = 0, den = 1;
  bool dot = false, digits = false;
  for (char ch : s) {
    if (ch == '.' && !dot) {
      dot = true;
      continue;
    }
    if (!std::isdigit(static_cast<unsigned char>(ch))) throw ConfigError("bad capacity '" + std::string(spec) + "'");
    if (num > (__int128{1} << 100)) throw ConfigError("capacity out of range");
    num = num * 10 + (ch - '0');
    if (dot) den *= 10;
    digits = true;
  }
  if (!digits) throw ConfigError("bad capacity '" + std::string(spec) + "'");
  __int128 bytes;
  if (percent) {
    bytes = num * footprint / (den * 100);
  } else {
    if (den != 1) throw ConfigError("byte capacity must be a whole number");
    bytes = num;
  }
  if (bytes < 1) throw ConfigError("capacity '" + std::string(spec) + "' is below one byte");
  if (bytes > INT64_MAX) throw ConfigError("capacity out of range");
  return static_cast<Bytes>(bytes);
}

}  // namespace hsynth::io
