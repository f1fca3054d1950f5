#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace knnrate {

// Flat `key = value` file; dotted section prefixes, `#` starts a comment.
// Getters record which keys were read so leftovers can be reported.
class Config {
 public:
  static Config parse(std::istream& in, const std::string& origin = "<config>");
  static Config parse_text(const std::string& text);
  static Config load(const std::string& path);

  bool has(const std::string& key) const;
  void set(const std::string& key, std::string value);

  std::optional<std::string> get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::optional<double> get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::optional<std::uint64_t> get_u64(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;        // comma separated
  std::vector<std::uint64_t> get_u64s(const std::string& key) const;    // comma separated
  std::vector<std::vector<double>> get_points(const std::string& key) const;  // ';' between points

  // Throws ValidationError naming every key that no getter touched.
  void reject_unused() const;

 private:
  std::map<std::string, std::string> values_;
  std::string origin_;
  mutable std::set<std::string> used_;
};

}  // namespace knnrate
