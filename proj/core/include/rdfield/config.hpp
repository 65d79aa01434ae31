// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace rdf {

/// Flat key -> string configuration store with three precedence layers:
/// explicit sets (CLI overrides) beat environment variables beat file
/// values. Keys are dotted lowercase paths ("train.stage2.iterations"); the
/// environment spelling uppercases the key and maps every non-alphanumeric
/// character to '_' under a fixed prefix, so `train.stage2.iterations` is
/// overridden by `RDF_TRAIN_STAGE2_ITERATIONS`. The environment is consulted
/// per lookup, which makes every key overridable whether or not it appears
/// in a file.
class Config {
 public:
  Config() = default;

  /// Parses `key = value` lines. '#' starts a comment, blank lines are
  /// skipped, whitespace around keys and values is trimmed. Throws
  /// std::runtime_error with file/line context on malformed input.
  static Config from_file(const std::filesystem::path& path);

  /// Parses the same syntax from a string (tests, inline specs).
  static Config from_string(const std::string& text,
                            const std::string& origin = "<string>");

  /// Merges another config's file layer into this one (later wins).
  void merge_file_layer(const Config& other);

  /// Sets one key at the highest-precedence layer (CLI override).
  void set(const std::string& key, const std::string& value);

  /// Applies one `key=value` override string (CLI --set).
  void set_from_assignment(const std::string& assignment);

  /// Environment prefix; empty disables environment lookups entirely.
  void set_env_prefix(std::string prefix) { env_prefix_ = std::move(prefix); }
  const std::string& env_prefix() const { return env_prefix_; }

  /// True when the key resolves through any layer.
  bool has(const std::string& key) const;

  /// Typed getters. The defaulted forms return `fallback` for absent keys;
  /// all of them throw std::runtime_error when a present value fails to
  /// parse (trailing junk counts as failure).
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated integer list, e.g. "0,1,2,3".
  std::vector<int> get_int_list(const std::string& key,
                                const std::vector<int>& fallback) const;
  /// Comma-separated number list, e.g. "-1.2,0.0,1.2".
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const;

  /// Keys present in the file and override layers, in first-insertion order
  /// (environment-only overrides are not enumerable).
  std::vector<std::string> keys() const { return order_; }

  /// Environment spelling of a key under `prefix` (exposed for tests).
  static std::string env_name(const std::string& prefix,
                              const std::string& key);

 private:
  /// Resolves a key through override > environment > file. The returned
  /// string stays valid until the next lookup.
  const std::string* find(const std::string& key) const;
  void set_file_value(const std::string& key, const std::string& value);

  std::map<std::string, std::string> file_values_;
  std::map<std::string, std::string> overrides_;
  std::vector<std::string> order_;
  std::string env_prefix_ = "RDF_";
  mutable std::string env_cache_;  // backing storage for env hits

  friend void parse_lines_into(std::istream& in, const std::string& origin,
                               Config* out);
};

}  // namespace rdf
