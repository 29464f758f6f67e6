#pragma once

// Flat key=value configuration with dotted keys, one entry per line:
//
//   # comment
//   env.kind=two_expert_switch
//   env.T=2200
//   learners=eg,fixed_share,tdmd
//   learner.tdmd.lambda=6
//
// Lists are comma separated; matrix rows are separated by ';'.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace trustdecay {

class Config {
 public:
  // Throws ConfigError naming the line on malformed or duplicate entries.
  static Config parse(std::string_view text);
  static Config load(const std::filesystem::path& path);

  // Sorted by key, one "key=value" per line.
  std::string serialize() const;

  void set(const std::string& key, std::string value);
  bool has(const std::string& key) const;
  std::optional<std::string> get(const std::string& key) const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

  // Typed readers. The `fallback` forms return the fallback when the key
  // is absent; the required forms throw ConfigError. Malformed values
  // always throw ConfigError with the key as field path.
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::size_t get_size(const std::string& key) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback = {}) const;
  std::vector<std::size_t> get_sizes(const std::string& key, std::vector<std::size_t> fallback = {}) const;
  std::vector<std::string> get_list(const std::string& key) const;
  // Rows separated by ';', entries by ','.
  std::vector<std::vector<double>> get_matrix(const std::string& key) const;

  // Keys never read through a getter, for typo warnings.
  std::vector<std::string> unused_keys() const;

 private:
  std::map<std::string, std::string> entries_;
  mutable std::set<std::string> used_;
};

std::string format_double(double value);
std::string join_doubles(const std::vector<double>& values);

}  // namespace trustdecay
