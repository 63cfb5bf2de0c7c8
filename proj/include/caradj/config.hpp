#pragma once

#include <charconv>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "caradj/errors.hpp"

namespace caradj {

/// Flat key=value settings in file order. `#` starts a comment.
class KeyValueConfig {
 public:
  void set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : entries_)
      if (k == key) {
        v = value;
        return;
      }
    entries_.emplace_back(key, value);
  }

  std::optional<std::string> get(const std::string& key) const {
    for (const auto& [k, v] : entries_)
      if (k == key) return v;
    return std::nullopt;
  }

  bool contains(const std::string& key) const { return get(key).has_value(); }
  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

namespace detail {

inline std::string trim_ws(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Parses `key = value` lines. Keys outside `allowed` and repeated keys are
/// rejected with the offending line number.
inline KeyValueConfig parse_config(std::istream& in, const std::set<std::string>& allowed,
                                   const std::string& source = "config") {
  KeyValueConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim_ws(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected key=value");
    const std::string key = detail::trim_ws(line.substr(0, eq));
    const std::string value = detail::trim_ws(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "empty key");
    if (!allowed.count(key)) throw ConfigError(where + "unknown key '" + key + "'");
    if (cfg.contains(key)) throw ConfigError(where + "duplicate key '" + key + "'");
    cfg.set(key, value);
  }
  return cfg;
}

inline KeyValueConfig load_config(const std::string& path, const std::set<std::string>& allowed) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, allowed, path);
}

inline long long config_int(const std::string& key, const std::string& v) {
  long long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
  return out;
}

inline unsigned long long config_uint(const std::string& key, const std::string& v) {
  unsigned long long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("'" + key + "' expects a non-negative integer, got '" + v + "'");
  return out;
}

/// Accepts plain decimals and simple fractions such as 2/3.
inline double config_real(const std::string& key, const std::string& v) {
  auto parse = [&](const std::string& s) {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
      throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
    return out;
  };
  if (const auto slash = v.find('/'); slash != std::string::npos) {
    const double den = parse(v.substr(slash + 1));
    if (den == 0.0) throw ConfigError("'" + key + "' has a zero denominator");
    return parse(v.substr(0, slash)) / den;
  }
  return parse(v);
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : v) {
    if (c == ',') {
      if (auto t = detail::trim_ws(cur); !t.empty()) out.push_back(t);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (auto t = detail::trim_ws(cur); !t.empty()) out.push_back(t);
  return out;
}

}  // namespace caradj
