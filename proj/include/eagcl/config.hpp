#pragma once

// Plain key=value configuration files ('#' starts a comment, blank lines
// ignored). Every key must be consumed by some typed getter; finish() rejects
// leftovers so a typo'd key fails loudly instead of silently using defaults.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "eagcl/common.hpp"

namespace eagcl {

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace detail

class ConfigMap {
 public:
  static ConfigMap parse(std::istream& is) {
    ConfigMap cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value, got '" +
                          line + "'");
      std::string key = detail::trim(line.substr(0, eq));
      std::string value = detail::trim(line.substr(eq + 1));
      if (key.empty())
        throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
      cfg.kv_[key] = value;
    }
    return cfg;
  }

  static ConfigMap parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    return parse(is);
  }

  // Override or add one key (used by --set key=value on the command line).
  void set(const std::string& key, const std::string& value) { kv_[key] = value; }

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    used_.insert(key);
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    used_.insert(key);
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    try {
      std::size_t pos = 0;
      double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': expected a number, got '" + it->second + "'");
    }
  }

  long get_long(const std::string& key, long fallback) const {
    used_.insert(key);
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    try {
      std::size_t pos = 0;
      long v = std::stol(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': expected an integer, got '" + it->second + "'");
    }
  }

  std::size_t get_size(const std::string& key, std::size_t fallback) const {
    long v = get_long(key, static_cast<long>(fallback));
    if (v < 0) throw ConfigError("config key '" + key + "': expected a non-negative integer");
    return static_cast<std::size_t>(v);
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    used_.insert(key);
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    try {
      std::size_t pos = 0;
      unsigned long long v = std::stoull(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
      return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': expected an unsigned integer, got '" +
                        it->second + "'");
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    used_.insert(key);
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    std::string v = it->second;
    std::transform(v.begin(), v.end(), v.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config key '" + key + "': expected a boolean, got '" + it->second + "'");
  }

  // Rejects keys no getter asked about.
  void finish() const {
    std::string unknown;
    for (const auto& [key, value] : kv_) {
      if (!used_.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
    }
    if (!unknown.empty()) throw ConfigError("unknown config keys: " + unknown);
  }

 private:
  std::map<std::string, std::string> kv_;
  mutable std::set<std::string> used_;
};

}  // namespace eagcl
