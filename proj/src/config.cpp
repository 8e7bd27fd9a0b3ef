#include "minigt/config.hpp"

#include <algorithm>
#include <sstream>

#include "minigt/errors.hpp"
#include "minigt/io.hpp"

namespace minigt {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

ConfigMap parse_config_file(const std::string& path) {
  ConfigMap cfg;
  cfg.path = path;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string line = lines[i];
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(i + 1) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(path + ":" + std::to_string(i + 1) + ": empty key");
    if (cfg.values.count(key))
      throw ConfigError(path + ":" + std::to_string(i + 1) + ": duplicate key '" + key + "'");
    cfg.values[key] = value;
    cfg.line_of[key] = static_cast<int>(i) + 1;
  }
  return cfg;
}

void ConfigMap::fail(const std::string& key, const std::string& what) const {
  throw ConfigError(path + ":" + std::to_string(line_of.at(key)) + ": " + what + " for key '" +
                    key + "': '" + values.at(key) + "'");
}

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) fail(key, "bad number");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    fail(key, "bad number");
  }
}

long ConfigMap::get_long(const std::string& key, long fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  try {
    std::size_t used = 0;
    const long v = std::stol(it->second, &used);
    if (used != it->second.size()) fail(key, "bad integer");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    fail(key, "bad integer");
  }
}

std::uint64_t ConfigMap::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(it->second, &used);
    if (used != it->second.size()) fail(key, "bad integer");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    fail(key, "bad integer");
  }
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(), ::tolower);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(key, "bad boolean");
}

std::vector<double> ConfigMap::get_double_list(const std::string& key,
                                               const std::vector<double>& fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  std::vector<double> out;
  std::istringstream ss(it->second);
  std::string field;
  while (std::getline(ss, field, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(field, &used);
      if (used != field.size()) fail(key, "bad number list");
      out.push_back(v);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      fail(key, "bad number list");
    }
  }
  if (out.empty()) fail(key, "empty list");
  return out;
}

std::vector<long> ConfigMap::get_long_list(const std::string& key,
                                           const std::vector<long>& fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  std::vector<long> out;
  std::istringstream ss(it->second);
  std::string field;
  while (std::getline(ss, field, ',')) {
    try {
      std::size_t used = 0;
      const long v = std::stol(field, &used);
      if (used != field.size()) fail(key, "bad integer list");
      out.push_back(v);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      fail(key, "bad integer list");
    }
  }
  if (out.empty()) fail(key, "empty list");
  return out;
}

void ConfigMap::require_known_keys(const std::set<std::string>& allowed) const {
  std::string complaints;
  for (const auto& [key, value] : values) {
    if (allowed.count(key)) continue;
    if (!complaints.empty()) complaints += "; ";
    complaints += path + ":" + std::to_string(line_of.at(key)) + ": unknown key '" + key + "'";
  }
  if (!complaints.empty()) throw ConfigError(complaints);
}

}  // namespace minigt
