// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "swe/phantom.hpp"

namespace swe {

enum class Split { kTrain, kVal, kTest };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

/// One phantom with its R raw (un-normalised) motion volumes.
struct DatasetSample {
  std::uint64_t seed = 0;
  Split split = Split::kTrain;
  double snr_db = 0.0;
  PhantomSpec spec;
  std::vector<MotionVolume> regions;
};

struct Dataset {
  std::string preset;
  RegionLayout layout;
  ArfConfig arf;
  std::vector<DatasetSample> samples;

  std::vector<std::size_t> indices(Split s) const;
};

struct GenerateOptions {
  std::size_t n = 8;
  double snr_db = 0.0;  ///< +inf for clean data
  std::uint64_t seed = 0;
  std::string preset = "desk";
  double val_fraction = 0.0;
  double test_fraction = 0.0;
};

inline constexpr std::uint32_t kManifestVersion = 1;

/// Integer inclusion stiffness values [min, max] shuffled and dealt into
/// train/val/test pools so no value appears in two splits.
std::array<std::vector<int>, 3> make_stiffness_pools(std::uint64_t seed, int min_kpa, int max_kpa,
                                                     double val_fraction, double test_fraction);

Dataset generate_dataset(const GenerateOptions& opts);

/// Writes `manifest` plus one SWED tensor (R x T x A x L) per sample.
void write_dataset(const Dataset& ds, const std::filesystem::path& dir);
/// Reads and verifies checksums and split disjointness.
Dataset read_dataset(const std::filesystem::path& dir);

/// Throws DataError(kSplitOverlap) if an inclusion stiffness value is shared across splits.
void validate_splits(const Dataset& ds);

/// Mean background:foreground pixel ratio over the given samples' masks.
double background_foreground_ratio(const Dataset& ds, const std::vector<std::size_t>& which);

}  // namespace swe
