#include "trustdecay/harness/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "trustdecay/error.hpp"

namespace trustdecay {
namespace {

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

bool valid_key(std::string_view key) {
  if (key.empty() || key.front() == '.' || key.back() == '.') return false;
  for (char c : key) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '.' || c == '-';
    if (!ok) return false;
  }
  return key.find("..") == std::string_view::npos;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

double parse_double(const std::string& key, const std::string& text) {
  if (text.empty()) throw ConfigError(key, "expected a number, got an empty value");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || errno == ERANGE || !std::isfinite(v)) {
    throw ConfigError(key, "expected a finite number, got '" + text + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
  if (text.empty() || text.front() == '-' || text.front() == '+') {
    throw ConfigError(key, "expected a nonnegative integer, got '" + text + "'");
  }
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
  if (end != text.c_str() + text.size() || errno == ERANGE) {
    throw ConfigError(key, "expected a nonnegative integer, got '" + text + "'");
  }
  return static_cast<std::uint64_t>(v);
}

}  // namespace

Config Config::parse(std::string_view text) {
  Config cfg;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto pos = text.find('\n', start);
    const std::string line = trim(text.substr(start, pos == std::string_view::npos ? pos : pos - start));
    ++line_no;
    start = pos == std::string_view::npos ? text.size() + 1 : pos + 1;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("", "line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (!valid_key(key)) {
      throw ConfigError(key, "line " + std::to_string(line_no) + ": invalid key");
    }
    if (cfg.entries_.count(key)) {
      throw ConfigError(key, "line " + std::to_string(line_no) + ": duplicate key");
    }
    cfg.entries_[key] = value;
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string Config::serialize() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
  return out;
}

void Config::set(const std::string& key, std::string value) {
  if (!valid_key(key)) throw ConfigError(key, "invalid key");
  if (value.find('\n') != std::string::npos) throw ConfigError(key, "value contains a newline");
  entries_[key] = trim(value);
}

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

std::optional<std::string> Config::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  used_.insert(key);
  return it->second;
}

std::string Config::get_string(const std::string& key) const {
  auto v = get(key);
  if (!v) throw ConfigError(key, "missing required key");
  return *v;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double Config::get_double(const std::string& key) const {
  return parse_double(key, get_string(key));
}

double Config::get_double(const std::string& key, double fallback) const {
  auto v = get(key);
  return v ? parse_double(key, *v) : fallback;
}

std::size_t Config::get_size(const std::string& key) const {
  return static_cast<std::size_t>(parse_u64(key, get_string(key)));
}

std::size_t Config::get_size(const std::string& key, std::size_t fallback) const {
  auto v = get(key);
  return v ? static_cast<std::size_t>(parse_u64(key, *v)) : fallback;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  auto v = get(key);
  return v ? parse_u64(key, *v) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1") return true;
  if (*v == "false" || *v == "0") return false;
  throw ConfigError(key, "expected true/false, got '" + *v + "'");
}

std::vector<double> Config::get_doubles(const std::string& key, std::vector<double> fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  std::vector<double> out;
  if (v->empty()) return out;
  for (const auto& part : split(*v, ',')) out.push_back(parse_double(key, part));
  return out;
}

std::vector<std::size_t> Config::get_sizes(const std::string& key,
                                           std::vector<std::size_t> fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  std::vector<std::size_t> out;
  if (v->empty()) return out;
  for (const auto& part : split(*v, ',')) out.push_back(static_cast<std::size_t>(parse_u64(key, part)));
  return out;
}

std::vector<std::string> Config::get_list(const std::string& key) const {
  auto v = get(key);
  if (!v || v->empty()) return {};
  return split(*v, ',');
}

std::vector<std::vector<double>> Config::get_matrix(const std::string& key) const {
  const std::string text = get_string(key);
  std::vector<std::vector<double>> rows;
  for (const auto& row : split(text, ';')) {
    std::vector<double> r;
    for (const auto& part : split(row, ',')) r.push_back(parse_double(key, part));
    if (!rows.empty() && r.size() != rows.front().size()) {
      throw ConfigError(key, "matrix rows have different lengths");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<std::string> Config::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_) {
    if (!used_.count(k)) out.push_back(k);
  }
  return out;
}

std::string format_double(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string join_doubles(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_double(values[i]);
  }
  return out;
}

}  // namespace trustdecay
