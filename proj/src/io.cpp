#include "driftmc/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "driftmc/error.hpp"

namespace driftmc::io {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(s.substr(start)));
      return out;
    }
    out.push_back(trim(s.substr(start, pos - start)));
    start = pos + 1;
  }
}

std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<long long> to_int(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

double require_double(std::string_view s, std::string_view what) {
  auto v = to_double(s);
  if (!v) throw InputError("expected a number for " + std::string(what) + ", got '" + std::string(s) + "'");
  return *v;
}

long long require_int(std::string_view s, std::string_view what) {
  auto v = to_int(s);
  if (!v) throw InputError("expected an integer for " + std::string(what) + ", got '" + std::string(s) + "'");
  return *v;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InputError("cannot read file " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, std::string_view content) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write file " + p.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw InputError("write failed for " + p.string());
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& p) {
  return parse(read_file(p), p.parent_path());
}

KeyValueConfig KeyValueConfig::parse(std::string_view text, std::filesystem::path base_dir) {
  KeyValueConfig cfg;
  cfg.base_dir_ = std::move(base_dir);
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw InputError("config line " + std::to_string(line_no) + ": expected key = value");
    auto key = trim(line.substr(0, eq));
    if (key.empty()) throw InputError("config line " + std::to_string(line_no) + ": empty key");
    cfg.values_[std::string(key)] = std::string(trim(line.substr(eq + 1)));
  }
  return cfg;
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueConfig::require(const std::string& key) const {
  auto v = get(key);
  if (!v) throw InputError("config is missing required key '" + key + "'");
  return *v;
}

double KeyValueConfig::require_double(const std::string& key) const {
  return io::require_double(require(key), key);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  auto v = get(key);
  return v ? io::require_double(*v, key) : fallback;
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const {
  auto v = get(key);
  return v ? io::require_int(*v, key) : fallback;
}

std::filesystem::path KeyValueConfig::path(const std::string& key) const {
  std::filesystem::path p = require(key);
  if (p.is_relative() && !base_dir_.empty()) p = base_dir_ / p;
  return p;
}

}  // namespace driftmc::io
