#pragma once

// Flat `key = value` config files with typed access and explicit unknown-key
// rejection: misspelled parameters in experiment configs must fail loudly.

#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "alps/common.hpp"

namespace alps {

class Config {
 public:
  Config() = default;

  static Config parse_string(const std::string& text, const std::string& origin = "<string>") {
    Config cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw config_error(origin + ":" + std::to_string(lineno) + ": expected `key = value`");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw config_error(origin + ":" + std::to_string(lineno) + ": empty key");
      if (cfg.values_.count(key))
        throw config_error(origin + ":" + std::to_string(lineno) + ": duplicate key `" + key + "`");
      cfg.values_[key] = value;
    }
    return cfg;
  }

  static Config parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key) const {
    consumed_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) throw config_error(origin_ + ": missing required key `" + key + "`");
    return it->second;
  }
  std::string get_string(const std::string& key, const std::string& fallback) const {
    consumed_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_real(const std::string& key) const { return to_real(key, get_string(key)); }
  double get_real(const std::string& key, double fallback) const {
    consumed_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? fallback : to_real(key, it->second);
  }

  long get_int(const std::string& key) const { return to_int(key, get_string(key)); }
  long get_int(const std::string& key, long fallback) const {
    consumed_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? fallback : to_int(key, it->second);
  }

  bool get_bool(const std::string& key, bool fallback) const {
    consumed_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw config_error(origin_ + ": key `" + key + "` must be true/false, got `" + it->second + "`");
  }

  // Comma-separated list of reals ("1, 2.5, -3").
  std::vector<double> get_real_list(const std::string& key) const {
    const std::string raw = get_string(key);
    std::vector<double> out;
    std::istringstream in(raw);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(to_real(key, trim(item)));
    if (out.empty()) throw config_error(origin_ + ": key `" + key + "` has no entries");
    return out;
  }

  // Throws unless every present key has been consumed by a getter.
  void reject_unknown() const {
    std::string extra;
    for (const auto& [k, v] : values_)
      if (!consumed_.count(k)) extra += (extra.empty() ? "" : ", ") + k;
    if (!extra.empty())
      throw config_error(origin_ + ": unknown key(s): " + extra);
  }

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }
  double to_real(const std::string& key, const std::string& v) const {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
      throw config_error(origin_ + ": key `" + key + "` is not a real number: `" + v + "`");
    return x;
  }
  long to_int(const std::string& key, const std::string& v) const {
    char* end = nullptr;
    const long x = std::strtol(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
      throw config_error(origin_ + ": key `" + key + "` is not an integer: `" + v + "`");
    return x;
  }

  std::string origin_ = "<empty>";
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> consumed_;
};

}  // namespace alps
