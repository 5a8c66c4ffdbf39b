// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#include "swe/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "swe/error.hpp"

namespace swe {

namespace {

std::size_t to_pixels(double mm, double px_per_mm) {
  return static_cast<std::size_t>(std::llround(mm * px_per_mm));
}

// Line integral of slowness along one depth row from x0 to x1 (mm, x0 <= x1).
// Cells outside the stored grid take the nearest edge value.
double path_slowness(const std::vector<double>& slowness, double dx, double x0, double x1) {
  const auto n = static_cast<long>(slowness.size());
  double acc = 0.0;
  for (long j = static_cast<long>(std::floor(x0 / dx)); static_cast<double>(j) * dx < x1; ++j) {
    const double lo = std::max(x0, static_cast<double>(j) * dx);
    const double hi = std::min(x1, static_cast<double>(j + 1) * dx);
    if (hi > lo) acc += (hi - lo) * slowness[static_cast<std::size_t>(std::clamp(j, 0L, n - 1))];
  }
  return acc;
}

}  // namespace

std::size_t PhantomSpec::axial_px() const { return to_pixels(roi_axial_mm, axial_res); }
std::size_t PhantomSpec::lateral_px() const { return to_pixels(roi_lateral_mm, lateral_res); }

void PhantomSpec::validate() const {
  if (roi_axial_mm <= 0 || roi_lateral_mm <= 0 || axial_res <= 0 || lateral_res <= 0)
    throw ConfigError("phantom: ROI extent and resolution must be positive");
  if (e_inclusion_kpa <= 0 || e_background_kpa <= 0)
    throw ConfigError("phantom: stiffness values must be strictly positive");
  if (density_kg_m3 <= 0) throw ConfigError("phantom: density must be strictly positive");
  if (inclusion_diameter_mm <= 0) throw ConfigError("phantom: inclusion diameter must be positive");
  const double r = 0.5 * inclusion_diameter_mm;
  const double margins[4] = {center_axial_mm - r, roi_axial_mm - center_axial_mm - r,
                             center_lateral_mm - r, roi_lateral_mm - center_lateral_mm - r};
  const char* names[4] = {"top", "bottom", "left", "right"};
  for (int i = 0; i < 4; ++i) {
    if (margins[i] < 0) {
      std::ostringstream os;
      os << "phantom: inclusion (d=" << inclusion_diameter_mm << " mm) crosses the " << names[i]
         << " ROI edge by " << -margins[i] << " mm";
      throw ConfigError(os.str());
    }
  }
}

std::size_t ArfConfig::raw_frames() const {
  return static_cast<std::size_t>(std::floor(prop_time_ms * 1e-3 * prf_hz + 1e-9));
}

void ArfConfig::validate() const {
  if (sigma_x_mm <= 0 || sigma_z_mm <= 0) throw ConfigError("arf: sigma values must be positive");
  if (prf_hz <= 0 || prop_time_ms <= 0 || push_duration_us <= 0)
    throw ConfigError("arf: timing parameters must be positive");
  if (a0_n_per_m3 <= 0) throw ConfigError("arf: force density must be positive");
}

void RegionLayout::validate() const {
  if (r_regions == 0 || lateral_offsets_px.size() != r_regions)
    throw ConfigError("layout: need one lateral offset per region");
  if (region_axial_px == 0 || region_lateral_px == 0 || frames_t == 0)
    throw ConfigError("layout: region shape must be non-empty");
  for (std::size_t k = 1; k < r_regions; ++k) {
    if (lateral_offsets_px[k] <= lateral_offsets_px[k - 1])
      throw ConfigError("layout: lateral offsets must be strictly increasing");
    if (lateral_offsets_px[k] >= lateral_offsets_px[k - 1] + region_lateral_px)
      throw ConfigError("layout: consecutive regions must overlap by at least one pixel");
  }
  if (lateral_offsets_px.front() != 0 ||
      lateral_offsets_px.back() + region_lateral_px != full_lateral_px)
    throw ConfigError("layout: regions must cover the full lateral extent exactly");
}

double RegionLayout::push_lateral_mm(std::size_t k, double lateral_res, const ArfConfig& arf) const {
  return static_cast<double>(lateral_offsets_px.at(k)) / lateral_res - arf.lateral_offset_mm;
}

Preset paper_preset() {
  Preset p;
  p.name = "paper";
  // 70 frames at 8 kHz need 8.75 ms of tracking.
  p.arf.prop_time_ms = 8.75;
  return p;
}

Preset desk_preset() {
  Preset p;
  p.name = "desk";
  p.layout.id = "desk-r2";
  p.layout.r_regions = 2;
  p.layout.region_axial_px = 64;
  p.layout.region_lateral_px = 16;
  p.layout.lateral_offsets_px = {0, 8};
  p.layout.full_lateral_px = 24;
  p.layout.frames_t = 32;
  p.arf.prf_hz = 4000.0;
  p.arf.prop_time_ms = 8.0;
  p.base.roi_axial_mm = 8.0;
  p.base.roi_lateral_mm = 12.0;
  p.base.axial_res = 8.0;
  p.base.lateral_res = 2.0;
  p.base.center_axial_mm = 4.0;
  p.base.center_lateral_mm = 6.0;
  p.base.inclusion_diameter_mm = 4.0;
  p.diameter_min_mm = 3.0;
  p.diameter_max_mm = 6.0;
  return p;
}

Preset preset_by_name(const std::string& name) {
  if (name == "paper") return paper_preset();
  if (name == "desk") return desk_preset();
  throw ConfigError("unknown preset '" + name + "' (expected paper|desk)");
}

double shear_speed_m_s(double e_kpa, double density_kg_m3) {
  return std::sqrt(e_kpa * 1e3 / (3.0 * density_kg_m3));
}

PhantomTruth make_phantom(const PhantomSpec& spec) {
  spec.validate();
  const std::size_t rows = spec.axial_px();
  const std::size_t cols = spec.lateral_px();
  PhantomTruth truth{Map2(rows, cols, static_cast<float>(spec.e_background_kpa)),
                     Mask2(rows, cols, 0), spec};
  const double r2 = 0.25 * spec.inclusion_diameter_mm * spec.inclusion_diameter_mm;
  for (std::size_t a = 0; a < rows; ++a) {
    const double dz = (static_cast<double>(a) + 0.5) / spec.axial_res - spec.center_axial_mm;
    for (std::size_t l = 0; l < cols; ++l) {
      const double dx = (static_cast<double>(l) + 0.5) / spec.lateral_res - spec.center_lateral_mm;
      if (dz * dz + dx * dx <= r2) {
        truth.mask(a, l) = 1;
        truth.modulus_kpa(a, l) = static_cast<float>(spec.e_inclusion_kpa);
      }
    }
  }
  return truth;
}

PhantomSpec sample_phantom_spec(const Preset& preset, std::uint64_t seed,
                                std::optional<double> e_inclusion_kpa) {
  std::mt19937_64 rng(seed);
  auto uniform = [&rng](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  PhantomSpec spec = preset.base;
  spec.seed = seed;
  const double d_max = std::min({preset.diameter_max_mm, spec.roi_axial_mm, spec.roi_lateral_mm});
  spec.inclusion_diameter_mm = uniform(preset.diameter_min_mm, d_max);
  const double r = 0.5 * spec.inclusion_diameter_mm;
  spec.center_axial_mm = uniform(r, spec.roi_axial_mm - r);
  spec.center_lateral_mm = uniform(r, spec.roi_lateral_mm - r);
  spec.e_background_kpa = uniform(preset.e_background_min_kpa, preset.e_background_max_kpa);
  const double e_inc = uniform(preset.e_inclusion_min_kpa, preset.e_inclusion_max_kpa);
  spec.e_inclusion_kpa = e_inclusion_kpa.value_or(e_inc);
  spec.validate();
  return spec;
}

MotionVolume simulate_region(const PhantomTruth& truth, const RegionLayout& layout, std::size_t k,
                             const ArfConfig& arf) {
  layout.validate();
  arf.validate();
  if (k >= layout.r_regions) throw ConfigError("simulate_region: region index out of range");
  const auto& spec = truth.spec;
  const Map2& e = truth.modulus_kpa;
  if (e.rows() != layout.region_axial_px || e.cols() != layout.full_lateral_px)
    throw DataError(DataError::Kind::kShape, "simulate_region: truth grid does not match layout");
  if (layout.frames_t > arf.raw_frames()) {
    std::ostringstream os;
    os << "simulate_region: " << layout.frames_t << " frames requested but prop_time "
       << arf.prop_time_ms << " ms at " << arf.prf_hz << " Hz yields only " << arf.raw_frames();
    throw ConfigError(os.str());
  }
  for (float v : e.values())
    if (!(v > 0.0f)) throw DataError("simulate_region: non-positive modulus in phantom");

  const std::size_t frames = layout.frames_t;
  const std::size_t rows = layout.region_axial_px;
  const std::size_t cols = layout.region_lateral_px;
  const std::size_t offset = layout.lateral_offsets_px[k];
  const double dx = 1.0 / spec.lateral_res;
  const double x_push = layout.push_lateral_mm(k, spec.lateral_res, arf);
  const double z0 = arf.focus_axial_mm.value_or(spec.center_axial_mm);
  const double sigma_t_ms = 0.5 * arf.push_duration_us * 1e-3;
  const double frame_ms = 1e3 / arf.prf_hz;
  const double t_last_ms = static_cast<double>(frames - 1) * frame_ms;
  // Peak displacement of 20 um at the reference force density.
  const double u0_um = 20.0 * arf.a0_n_per_m3 / 2e5;
  constexpr double kMinDistanceMm = 1.0;

  MotionVolume vol;
  vol.data = Grid3<float>(frames, rows, cols);
  vol.region_index = k;
  vol.layout_id = layout.id;

  std::vector<double> slowness(e.cols());  // ms per mm
  double latest_arrival = 0.0;
  for (std::size_t a = 0; a < rows; ++a) {
    for (std::size_t j = 0; j < e.cols(); ++j)
      slowness[j] = 1.0 / shear_speed_m_s(e(a, j), spec.density_kg_m3);
    const double z = (static_cast<double>(a) + 0.5) / spec.axial_res;
    const double axial_env = std::exp(-(z - z0) * (z - z0) / (2.0 * arf.sigma_z_mm * arf.sigma_z_mm));
    for (std::size_t l = 0; l < cols; ++l) {
      const double x = (static_cast<double>(offset + l) + 0.5) * dx;
      const double dist = std::abs(x - x_push);
      const double arrival = x >= x_push ? path_slowness(slowness, dx, x_push, x)
                                         : path_slowness(slowness, dx, x, x_push);
      latest_arrival = std::max(latest_arrival, arrival);
      const double amp = u0_um * axial_env * std::sqrt(kMinDistanceMm / std::max(dist, kMinDistanceMm));
      for (std::size_t t = 0; t < frames; ++t) {
        const double dt = static_cast<double>(t) * frame_ms - arrival;
        vol.data(t, a, l) = static_cast<float>(amp * std::exp(-dt * dt / (2.0 * sigma_t_ms * sigma_t_ms)));
      }
    }
  }
  vol.arrival_truncated = latest_arrival + 2.0 * sigma_t_ms > t_last_ms;
  return vol;
}

MotionVolume add_noise(const MotionVolume& vol, double snr_db, std::uint64_t seed) {
  MotionVolume out = vol;
  out.snr_db = snr_db;
  if (std::isinf(snr_db) && snr_db > 0) return out;
  double power = 0.0;
  for (float v : vol.data.values()) power += static_cast<double>(v) * v;
  power /= static_cast<double>(std::max<std::size_t>(vol.data.size(), 1));
  const double sigma = std::sqrt(power) * std::pow(10.0, -snr_db / 20.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (float& v : out.data.values()) v = static_cast<float>(v + noise(rng));
  return out;
}

MotionVolume min_max_normalize(const MotionVolume& vol) {
  const auto values = vol.data.values();
  if (values.empty()) throw NumericError("min_max_normalize: empty volume");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const float lo = *lo_it;
  const float hi = *hi_it;
  if (!(hi > lo)) throw NumericError("min_max_normalize: constant volume cannot be normalised");
  MotionVolume out = vol;
  const double span = static_cast<double>(hi) - lo;
  for (float& v : out.data.values()) v = static_cast<float>((static_cast<double>(v) - lo) / span);
  out.norm_range = std::make_pair(lo, hi);
  return out;
}

}  // namespace swe
