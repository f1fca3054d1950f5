#include "knnrate/config.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "knnrate/errors.hpp"

namespace knnrate {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  const char* b = text.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(b, &end);
  if (end == b || *end != '\0' || errno == ERANGE || !std::isfinite(v))
    throw ValidationError("config key '" + key + "': '" + text + "' is not a finite number");
  return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ValidationError("config key '" + key + "': '" + text + "' is not an unsigned integer");
  return v;
}

}  // namespace

Config Config::parse(std::istream& in, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ValidationError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (cfg.values_.count(key))
      throw ValidationError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    cfg.values_.emplace(std::move(key), std::move(value));
  }
  return cfg;
}

Config Config::parse_text(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  return parse(in, path);
}

bool Config::has(const std::string& key) const { return values_.count(key) != 0; }

void Config::set(const std::string& key, std::string value) { values_[key] = std::move(value); }

std::optional<std::string> Config::get_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  used_.insert(key);
  return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return get_string(key).value_or(fallback);
}

std::optional<double> Config::get_double(const std::string& key) const {
  auto s = get_string(key);
  if (!s) return std::nullopt;
  return to_double(key, *s);
}

double Config::get_double(const std::string& key, double fallback) const {
  return get_double(key).value_or(fallback);
}

std::optional<std::uint64_t> Config::get_u64(const std::string& key) const {
  auto s = get_string(key);
  if (!s) return std::nullopt;
  return to_u64(key, *s);
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  return get_u64(key).value_or(fallback);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto s = get_string(key);
  if (!s) return fallback;
  if (*s == "true" || *s == "1" || *s == "yes") return true;
  if (*s == "false" || *s == "0" || *s == "no") return false;
  throw ValidationError("config key '" + key + "': '" + *s + "' is not a boolean");
}

std::vector<double> Config::get_doubles(const std::string& key) const {
  std::vector<double> out;
  if (auto s = get_string(key))
    for (const auto& part : split(*s, ',')) out.push_back(to_double(key, part));
  return out;
}

std::vector<std::uint64_t> Config::get_u64s(const std::string& key) const {
  std::vector<std::uint64_t> out;
  if (auto s = get_string(key))
    for (const auto& part : split(*s, ',')) out.push_back(to_u64(key, part));
  return out;
}

std::vector<std::vector<double>> Config::get_points(const std::string& key) const {
  std::vector<std::vector<double>> out;
  if (auto s = get_string(key)) {
    for (const auto& point : split(*s, ';')) {
      std::vector<double> p;
      for (const auto& part : split(point, ',')) p.push_back(to_double(key, part));
      out.push_back(std::move(p));
    }
  }
  return out;
}

void Config::reject_unused() const {
  std::string unknown;
  for (const auto& [key, value] : values_)
    if (!used_.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
  if (!unknown.empty()) throw ValidationError(origin_ + ": unknown config keys: " + unknown);
}

}  // namespace knnrate
