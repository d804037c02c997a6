#ifndef UDG_CONFIG_HPP
#define UDG_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "udg/common.hpp"

namespace udg {

/// Flat key=value configuration with '#' comments. Keys are dotted paths
/// (grid.cells, solver.tol). Values keep their raw text until queried.
class ConfigMap {
 public:
  void set(const std::string& key, const std::string& value) { kv_[key] = value; }

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  const std::map<std::string, std::string>& entries() const { return kv_; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    return parse_double(key, it->second);
  }

  std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    std::size_t pos = 0;
    std::int64_t v = 0;
    try {
      v = std::stoll(it->second, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("config: key '" + key + "' is not an integer: " + it->second);
    }
    if (pos != it->second.size())
      throw std::invalid_argument("config: key '" + key + "' is not an integer: " + it->second);
    return v;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw std::invalid_argument("config: key '" + key + "' is not a boolean: " + it->second);
  }

  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    std::istringstream in(it->second);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) out.push_back(parse_double(key, tok));
    if (out.empty())
      throw std::invalid_argument("config: key '" + key + "' holds no numbers");
    return out;
  }

  std::vector<std::string> get_strings(const std::string& key,
                                       const std::vector<std::string>& fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    std::istringstream in(it->second);
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
  }

  Vec3 get_vec3(const std::string& key, const Vec3& fallback) const {
    if (!has(key)) return fallback;
    const std::vector<double> v = get_doubles(key, {});
    if (v.size() != 3)
      throw std::invalid_argument("config: key '" + key + "' needs exactly 3 numbers");
    return {v[0], v[1], v[2]};
  }

  /// Parse one "key = value" line; blank lines and '#' comments are skipped.
  void parse_line(const std::string& raw) {
    const std::string line = strip_comment(raw);
    const std::string t = trim(line);
    if (t.empty()) return;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: missing '=' in line: " + raw);
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw std::invalid_argument("config: empty key in line: " + raw);
    set(key, value);
  }

  void parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::string line;
    while (std::getline(in, line)) parse_line(line);
  }

  /// "key=value" command-line override.
  void apply_override(const std::string& assignment) { parse_line(assignment); }

  /// Order-independent fingerprint of the effective configuration.
  std::uint64_t fingerprint() const {
    std::uint64_t h = fnv1a("udg-config");
    for (const auto& [k, v] : kv_) {
      h = fnv1a(k, h);
      h = fnv1a("=", h);
      h = fnv1a(v, h);
      h = fnv1a("\n", h);
    }
    return h;
  }

 private:
  static double parse_double(const std::string& key, const std::string& text) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(text, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("config: key '" + key + "' is not a number: " + text);
    }
    if (pos != text.size())
      throw std::invalid_argument("config: key '" + key + "' is not a number: " + text);
    return v;
  }

  static std::string strip_comment(const std::string& s) {
    const std::size_t hash = s.find('#');
    return hash == std::string::npos ? s : s.substr(0, hash);
  }

  static std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
  }

  std::map<std::string, std::string> kv_;
};

}  // namespace udg

#endif
