#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace minigt {

// Line-oriented key=value files; '#' starts a comment, blank lines ignored.
struct ConfigMap {
  std::string path;
  std::map<std::string, std::string> values;
  std::map<std::string, int> line_of;

  bool has(const std::string& key) const { return values.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_double_list(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<long> get_long_list(const std::string& key, const std::vector<long>& fallback) const;

  // Hard error (with line numbers) if any present key is not in `allowed`.
  void require_known_keys(const std::set<std::string>& allowed) const;

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;
};

ConfigMap parse_config_file(const std::string& path);

}
