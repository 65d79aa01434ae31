// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#include "rdfield/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rdf {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void parse_fail(const std::string& key, const std::string& value,
                             const char* wanted) {
  throw std::runtime_error("config key '" + key + "': cannot parse '" + value +
                           "' as " + wanted);
}

}  // namespace

void parse_lines_into(std::istream& in, const std::string& origin,
                      Config* out) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                               ": expected 'key = value', got '" + body + "'");
    }
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) {
      throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                               ": empty key");
    }
    out->set_file_value(key, trim(body.substr(eq + 1)));
  }
}

Config Config::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config file: " + path.string());
  }
  Config cfg;
  parse_lines_into(in, path.string(), &cfg);
  return cfg;
}

Config Config::from_string(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  Config cfg;
  parse_lines_into(in, origin, &cfg);
  return cfg;
}

void Config::merge_file_layer(const Config& other) {
  for (const std::string& key : other.order_) {
    auto it = other.file_values_.find(key);
    if (it != other.file_values_.end()) set_file_value(key, it->second);
  }
}

std::string Config::env_name(const std::string& prefix,
                             const std::string& key) {
  std::string name = prefix;
  for (char c : key) {
    name += std::isalnum(static_cast<unsigned char>(c))
                ? static_cast<char>(std::toupper(static_cast<unsigned char>(c)))
                : '_';
  }
  return name;
}

void Config::set_file_value(const std::string& key, const std::string& value) {
  auto [it, inserted] = file_values_.insert_or_assign(key, value);
  (void)it;
  if (inserted && overrides_.count(key) == 0) order_.push_back(key);
}

void Config::set(const std::string& key, const std::string& value) {
  auto [it, inserted] = overrides_.insert_or_assign(key, value);
  (void)it;
  if (inserted && file_values_.count(key) == 0) order_.push_back(key);
}

void Config::set_from_assignment(const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || trim(assignment.substr(0, eq)).empty()) {
    throw std::runtime_error("override must be key=value, got '" + assignment +
                             "'");
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

const std::string* Config::find(const std::string& key) const {
  auto ov = overrides_.find(key);
  if (ov != overrides_.end()) return &ov->second;
  if (!env_prefix_.empty()) {
    const char* env = std::getenv(env_name(env_prefix_, key).c_str());
    if (env != nullptr) {
      env_cache_ = env;
      return &env_cache_;
    }
  }
  auto fv = file_values_.find(key);
  return fv == file_values_.end() ? nullptr : &fv->second;
}

bool Config::has(const std::string& key) const { return find(key) != nullptr; }

std::string Config::get_string(const std::string& key,
                               const std::string& fallback) const {
  const std::string* v = find(key);
  return v ? *v : fallback;
}

std::string Config::require_string(const std::string& key) const {
  const std::string* v = find(key);
  if (!v) throw std::runtime_error("missing required config key '" + key + "'");
  return *v;
}

double Config::get_double(const std::string& key, double fallback) const {
  const std::string* v = find(key);
  if (!v) return fallback;
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(*v, &pos);
  } catch (const std::exception&) {
    parse_fail(key, *v, "a number");
  }
  if (pos != v->size()) parse_fail(key, *v, "a number");
  return out;
}

int Config::get_int(const std::string& key, int fallback) const {
  const std::string* v = find(key);
  if (!v) return fallback;
  std::size_t pos = 0;
  long out = 0;
  try {
    out = std::stol(*v, &pos);
  } catch (const std::exception&) {
    parse_fail(key, *v, "an integer");
  }
  if (pos != v->size()) parse_fail(key, *v, "an integer");
  return static_cast<int>(out);
}

std::uint64_t Config::get_u64(const std::string& key,
                              std::uint64_t fallback) const {
  const std::string* v = find(key);
  if (!v) return fallback;
  std::size_t pos = 0;
  unsigned long long out = 0;
  try {
    out = std::stoull(*v, &pos);
  } catch (const std::exception&) {
    parse_fail(key, *v, "an unsigned integer");
  }
  if (pos != v->size()) parse_fail(key, *v, "an unsigned integer");
  return static_cast<std::uint64_t>(out);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const std::string* v = find(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "on" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "off" || *v == "no") return false;
  parse_fail(key, *v, "a boolean");
}

std::vector<int> Config::get_int_list(const std::string& key,
                                      const std::vector<int>& fallback) const {
  const std::string* v = find(key);
  if (!v) return fallback;
  const std::string text = *v;  // copy: find()'s env cache may be reused
  std::vector<int> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::size_t pos = 0;
    try {
      out.push_back(std::stoi(item, &pos));
    } catch (const std::exception&) {
      parse_fail(key, text, "an integer list");
    }
    if (pos != item.size()) parse_fail(key, text, "an integer list");
  }
  return out;
}

std::vector<double> Config::get_double_list(
    const std::string& key, const std::vector<double>& fallback) const {
  const std::string* v = find(key);
  if (!v) return fallback;
  const std::string text = *v;
  std::vector<double> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::size_t pos = 0;
    try {
      out.push_back(std::stod(item, &pos));
    } catch (const std::exception&) {
      parse_fail(key, text, "a number list");
    }
    if (pos != item.size()) parse_fail(key, text, "a number list");
  }
  return out;
}

}  // namespace rdf
