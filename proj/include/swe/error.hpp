// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace swe {

/// Invalid configuration or argument (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed, missing or inconsistent data (CLI exit code 3).
class DataError : public std::runtime_error {
 public:
  enum class Kind {
    kGeneric,
    kBadMagic,
    kVersionMismatch,
    kTruncated,
    kChecksum,
    kSplitOverlap,
    kFingerprint,
    kCoverage,
    kShape,
  };

  DataError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  explicit DataError(const std::string& what) : DataError(Kind::kGeneric, what) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// NaN/Inf during optimisation or a degenerate numeric input (CLI exit code 4).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace swe
