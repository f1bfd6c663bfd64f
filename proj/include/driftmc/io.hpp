#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace driftmc::io {

/// Shortest-safe decimal form with 17 significant digits; round-trips any double.
std::string fmt(double v);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

std::optional<double> to_double(std::string_view s);
std::optional<long long> to_int(std::string_view s);
double require_double(std::string_view s, std::string_view what);
long long require_int(std::string_view s, std::string_view what);

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, std::string_view content);

/// `key = value` lines; `#` starts a comment. Keys are case-sensitive.
class KeyValueConfig {
 public:
  static KeyValueConfig load(const std::filesystem::path& p);
  static KeyValueConfig parse(std::string_view text, std::filesystem::path base_dir = {});

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  std::string require(const std::string& key) const;
  double require_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  /// Relative paths resolve against the directory of the config file.
  std::filesystem::path path(const std::string& key) const;
  const std::filesystem::path& base_dir() const { return base_dir_; }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

 private:
  std::map<std::string, std::string> values_;
  std::filesystem::path base_dir_;
};

}  // namespace driftmc::io
