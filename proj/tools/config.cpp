#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mdiqp::cli {

namespace {

std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

bool is_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
  return true;
}

// Strips a trailing comment outside quotes.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

}  // namespace

Config Config::parse(std::string_view text, const std::string& origin) {
  Config c;
  c.origin_ = origin;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(strip_comment(line));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const auto where = origin + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const auto key = trim(std::string_view(body).substr(0, eq));
    const auto value = trim(std::string_view(body).substr(eq + 1));
    if (!is_key(key)) throw ConfigError(where + ": invalid key '" + key + "'");
    if (value.empty()) throw ConfigError(where + ": empty value for '" + key + "'");
    if (std::count(value.begin(), value.end(), '"') % 2 != 0) throw ConfigError(where + ": unterminated string");
    if ((value.front() == '[') != (value.back() == ']')) throw ConfigError(where + ": unbalanced list brackets");
    if (c.values_.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    c.values_[key] = value;
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str(), path);
}

void Config::set(const std::string& key, const std::string& raw) {
  if (!is_key(key)) throw ConfigError("invalid key '" + key + "'");
  values_[key] = raw;
}

std::string Config::str(const std::string& key, const std::string& fallback) const {
  used_.insert(key);
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second.front() == '[') throw ConfigError(origin_ + ": '" + key + "' must be a scalar");
  return unquote(it->second);
}

double Config::num(const std::string& key, double fallback) const {
  if (!has(key)) {
    used_.insert(key);
    return fallback;
  }
  const auto s = str(key, "");
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError(origin_ + ": '" + key + "' is not a number: " + s);
  return v;
}

std::int64_t Config::integer(const std::string& key, std::int64_t fallback) const {
  if (!has(key)) {
    used_.insert(key);
    return fallback;
  }
  const auto s = str(key, "");
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError(origin_ + ": '" + key + "' is not an integer: " + s);
  return v;
}

std::uint64_t Config::u64(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) {
    used_.insert(key);
    return fallback;
  }
  const auto s = str(key, "");
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ConfigError(origin_ + ": '" + key + "' is not an unsigned integer: " + s);
  return v;
}

bool Config::boolean(const std::string& key, bool fallback) const {
  if (!has(key)) {
    used_.insert(key);
    return fallback;
  }
  const auto s = str(key, "");
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError(origin_ + ": '" + key + "' is not a boolean: " + s);
}

std::vector<std::string> Config::strs(const std::string& key, const std::vector<std::string>& fallback) const {
  used_.insert(key);
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const auto& v = it->second;
  if (v.front() != '[') return {unquote(v)};
  std::vector<std::string> out;
  const auto inner = trim(std::string_view(v).substr(1, v.size() - 2));
  if (inner.empty()) return out;
  std::string cur;
  bool quoted = false;
  for (char ch : inner) {
    if (ch == '"') quoted = !quoted;
    if (ch == ',' && !quoted) {
      out.push_back(unquote(trim(cur)));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(unquote(trim(cur)));
  for (const auto& e : out)
    if (e.empty()) throw ConfigError(origin_ + ": empty list element in '" + key + "'");
  return out;
}

std::vector<double> Config::nums(const std::string& key, const std::vector<double>& fallback) const {
  if (!has(key)) {
    used_.insert(key);
    return fallback;
  }
  std::vector<double> out;
  for (const auto& s : strs(key, {})) {
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
      throw ConfigError(origin_ + ": '" + key + "' has a non-numeric element: " + s);
    out.push_back(v);
  }
  return out;
}

std::vector<std::int64_t> Config::integers(const std::string& key, const std::vector<std::int64_t>& fallback) const {
  if (!has(key)) {
    used_.insert(key);
    return fallback;
  }
  std::vector<std::int64_t> out;
  for (const auto& s : strs(key, {})) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
      throw ConfigError(origin_ + ": '" + key + "' has a non-integer element: " + s);
    out.push_back(v);
  }
  return out;
}

void Config::reject_unused() const {
  for (const auto& [k, v] : values_)
    if (!used_.count(k)) throw ConfigError(origin_ + ": unknown key '" + k + "'");
}

std::string Config::echo() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

}  // namespace mdiqp::cli
