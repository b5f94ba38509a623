#pragma once

// Flat "key = value" configuration files. '#' starts a comment, blank lines
// are skipped. Values stay strings until a typed getter is called.

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "evdag/error.hpp"

namespace evdag {

inline std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

class KeyValueFile {
 public:
  KeyValueFile() = default;

  static KeyValueFile parse_text(const std::string& text, const std::string& origin) {
    KeyValueFile kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string s = line;
      size_t hash = s.find('#');
      if (hash != std::string::npos) s = s.substr(0, hash);
      s = trim(s);
      if (s.empty()) continue;
      size_t eq = s.find('=');
      if (eq == std::string::npos)
        fail(ErrorCode::Parse, origin + ":" + std::to_string(lineno) +
                                   ": expected 'key = value', got '" + s + "'");
      std::string key = trim(s.substr(0, eq));
      std::string value = trim(s.substr(eq + 1));
      if (key.empty())
        fail(ErrorCode::Parse, origin + ":" + std::to_string(lineno) + ": empty key");
      kv.values_[key] = value;
    }
    return kv;
  }

  static KeyValueFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str(), path);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& dflt) const {
    auto it = values_.find(key);
    return it == values_.end() ? dflt : it->second;
  }

  double get_double(const std::string& key, double dflt) const {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    try {
      size_t pos = 0;
      double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      fail(ErrorCode::Config, "key '" + key + "' is not a number: '" + it->second + "'");
    }
  }

  long long get_int(const std::string& key, long long dflt) const {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    try {
      size_t pos = 0;
      long long v = std::stoll(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      fail(ErrorCode::Config, "key '" + key + "' is not an integer: '" + it->second + "'");
    }
  }

  bool get_bool(const std::string& key, bool dflt) const {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail(ErrorCode::Config, "key '" + key + "' is not a boolean: '" + v + "'");
  }

  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& dflt) const {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    std::vector<double> out;
    std::string item;
    std::istringstream ss(it->second);
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      try {
        out.push_back(std::stod(item));
      } catch (const std::exception&) {
        fail(ErrorCode::Config, "key '" + key + "' has a non-numeric element '" + item + "'");
      }
    }
    return out;
  }

  // Rejects keys outside `known`; used so that a typo in a config file fails
  // loudly naming the key.
  void require_known_keys(const std::vector<std::string>& known) const {
    for (const auto& [key, value] : values_) {
      bool ok = false;
      for (const auto& k : known)
        if (k == key) { ok = true; break; }
      if (!ok) fail(ErrorCode::Config, "unknown config key '" + key + "'");
    }
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

} // namespace evdag
