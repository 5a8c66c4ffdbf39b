// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace swe {

/// Flat key-value configuration with optional `[section]` headers:
///
///   # comment
///   [train]
///   lr = 0.001
///   batch = 8
///
/// Sections only group keys; every key is global, so the CLI flag `--lr`
/// overrides `lr` wherever it was declared. Redeclaring a key is an error.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Section a key was declared in ("" for top level or CLI overrides).
  std::string section_of(const std::string& key) const;
  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> sections_;
};

}  // namespace swe
