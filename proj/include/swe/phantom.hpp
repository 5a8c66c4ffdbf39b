// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "swe/grid.hpp"

namespace swe {

/// Modulus maps are regressed in units of this reference (normalised = kPa / 100).
inline constexpr double kReferenceKpa = 100.0;

/// Geometry and material parameters of one bi-level (disc inclusion) phantom.
struct PhantomSpec {
  double roi_axial_mm = 21.0;
  double roi_lateral_mm = 40.0;
  double axial_res = 8.0;    ///< px/mm
  double lateral_res = 1.0;  ///< px/mm of the stored truth grid
  double center_axial_mm = 10.5;
  double center_lateral_mm = 20.0;
  double inclusion_diameter_mm = 8.0;
  double e_inclusion_kpa = 40.0;
  double e_background_kpa = 20.0;
  double density_kg_m3 = 1000.0;
  std::uint64_t seed = 0;

  std::size_t axial_px() const;
  std::size_t lateral_px() const;

  /// Throws ConfigError naming the violated constraint.
  void validate() const;
};

struct PhantomTruth {
  Map2 modulus_kpa;  ///< A' x L'
  Mask2 mask;        ///< 1 inside the inclusion
  PhantomSpec spec;
};

/// Acoustic radiation force push and tracking sequence.
struct ArfConfig {
  double a0_n_per_m3 = 2e5;
  double sigma_x_mm = 0.44;
  double sigma_z_mm = 8.0;
  /// Axial focus; defaults to the inclusion depth when unset.
  std::optional<double> focus_axial_mm;
  double push_duration_us = 400.0;
  double prop_time_ms = 8.0;
  double prf_hz = 8000.0;
  double lateral_offset_mm = 4.0;

  /// floor(prop_time * prf)
  std::size_t raw_frames() const;
  void validate() const;
};

/// Placement of the R overlapping push regions inside the full ROI.
struct RegionLayout {
  std::string id = "paper-r4";
  std::size_t r_regions = 4;
  std::size_t region_axial_px = 168;
  std::size_t region_lateral_px = 16;
  std::vector<std::size_t> lateral_offsets_px{0, 8, 16, 24};
  std::size_t full_lateral_px = 40;
  std::size_t frames_t = 70;

  void validate() const;
  /// Lateral ARF position for region k, in mm from the ROI's left edge.
  double push_lateral_mm(std::size_t k, double lateral_res, const ArfConfig& arf) const;
};

/// One region's displacement stack, indexed (t, a, l).
struct MotionVolume {
  Grid3<float> data;
  std::size_t region_index = 0;
  std::string layout_id;
  double snr_db = std::numeric_limits<double>::infinity();
  /// (min, max) used by min_max_normalize, when applied.
  std::optional<std::pair<float, float>> norm_range;
  /// Set when the slowest arrival does not fit inside the frame budget.
  bool arrival_truncated = false;
};

/// A named bundle of defaults and sampling ranges.
struct Preset {
  std::string name;
  RegionLayout layout;
  ArfConfig arf;
  PhantomSpec base;
  double diameter_min_mm = 3.0;
  double diameter_max_mm = 12.0;
  double e_inclusion_min_kpa = 8.0;
  double e_inclusion_max_kpa = 100.0;
  double e_background_min_kpa = 10.0;
  double e_background_max_kpa = 35.0;
};

Preset paper_preset();
/// Reduced geometry for fast tests: T=32, A=64, L=16, R=2.
Preset desk_preset();
/// "paper" or "desk"; throws ConfigError otherwise.
Preset preset_by_name(const std::string& name);

/// Shear-wave speed sqrt(E / (3 rho)) in m/s.
double shear_speed_m_s(double e_kpa, double density_kg_m3);

PhantomTruth make_phantom(const PhantomSpec& spec);

/// Draws a phantom from the preset's ranges. When `e_inclusion_kpa` is given it
/// overrides the random inclusion stiffness (used to keep splits disjoint).
PhantomSpec sample_phantom_spec(const Preset& preset, std::uint64_t seed,
                                std::optional<double> e_inclusion_kpa = std::nullopt);

/// Analytic traveling-pulse surrogate of the shear wave launched by push k.
/// Output is axial displacement in micrometres.
MotionVolume simulate_region(const PhantomTruth& truth, const RegionLayout& layout, std::size_t k,
                             const ArfConfig& arf);

/// Additive white Gaussian noise at the requested SNR; +inf returns a copy.
MotionVolume add_noise(const MotionVolume& vol, double snr_db, std::uint64_t seed);

/// Affine map onto [0, 1]. Throws NumericError on a constant volume.
MotionVolume min_max_normalize(const MotionVolume& vol);

}  // namespace swe
