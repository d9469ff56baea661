#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mdiqp::cli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat key/value configuration:
//
//   # comment
//   experiment = criteria-scan
//   sizes = [64, 128, 256]
//   generator = "measurement-driven"
//
// Values are bare tokens, double-quoted strings, or bracketed lists of
// either. Typed getters record which keys were read so unknown keys can be
// rejected after an experiment has pulled its settings.
class Config {
 public:
  static Config parse(std::string_view text, const std::string& origin = "<config>");
  static Config load(const std::string& path);

  void set(const std::string& key, const std::string& raw);
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string str(const std::string& key, const std::string& fallback) const;
  double num(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key, std::int64_t fallback) const;
  std::uint64_t u64(const std::string& key, std::uint64_t fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::vector<double> nums(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<std::int64_t> integers(const std::string& key, const std::vector<std::int64_t>& fallback) const;
  std::vector<std::string> strs(const std::string& key, const std::vector<std::string>& fallback) const;

  // Throws for keys never read through a getter.
  void reject_unused() const;
  // Canonical "key = value" lines in key order.
  std::string echo() const;
  const std::map<std::string, std::string>& raw() const { return values_; }

 private:
  std::string origin_;
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

}  // namespace mdiqp::cli
