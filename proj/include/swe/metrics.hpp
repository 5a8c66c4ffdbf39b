// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "swe/grid.hpp"
#include "swe/phantom.hpp"

namespace swe::metrics {

/// -10 log10(MSE) after dividing each image by its own maximum.
/// Identical images give +inf. Throws NumericError if a maximum is not positive.
double psnr(const Map2& truth, const Map2& estimate);

/// PSNR with the MSE restricted to pixels where mask == `label`
/// (normalisation still uses each image's global maximum).
double psnr_masked(const Map2& truth, const Map2& estimate, const Mask2& mask, std::uint8_t label);

/// 20 log10(|mu_fg - mu_bg| / sigma_bg). sigma_bg = 0 gives +inf, zero contrast -inf.
double cnr(const Map2& image, const Mask2& mask);

/// Global-statistics SSIM with eps1 = (0.01 D)^2, eps2 = (0.03 D)^2 and D the joint value range.
double ssim(const Map2& truth, const Map2& estimate);

struct RegionMae {
  double fg = 0.0;
  double bg = 0.0;
};

/// Mean absolute error over inclusion and background pixels, multiplied by `scale`
/// (100 converts normalised maps to kPa).
RegionMae region_mae(const Map2& estimate, const Map2& truth, const Mask2& mask, double scale = 1.0);

struct Overlap {
  double iou = 0.0;
  double f1 = 0.0;
  bool degenerate = false;  ///< both masks empty; reported as (1, 1)
};

Overlap iou_f1(const Mask2& prediction, const Mask2& truth);

struct SurfaceDistance {
  double hd = 0.0;
  double assd = 0.0;
};

/// Boundary pixels: mask pixels with at least one background 4-neighbour
/// (outside the image counts as background).
Mask2 surface(const Mask2& mask);

/// Hausdorff distance and ASSD. ASSD divides the two directed distance sums
/// by the total mask pixel count n(gt) + n(pred). Throws on an empty mask.
SurfaceDistance hd_assd(const Mask2& prediction, const Mask2& truth, double spacing_axial = 1.0,
                        double spacing_lateral = 1.0);

/// 1 where value >= threshold.
Mask2 binarize(const Map2& soft, float threshold = 0.5f);

struct TtpEstimate {
  double speed_m_s = 0.0;
  double ttp1_ms = 0.0;
  double ttp2_ms = 0.0;
};

/// Time-of-flight speed between columns x1 < x2 of one depth row, from
/// sub-frame time-to-peak. Throws NumericError on a flat trace or when the
/// wave does not arrive later at x2.
TtpEstimate ttp_speed_estimate(const MotionVolume& vol, std::size_t depth_row, std::size_t x1,
                               std::size_t x2, double lateral_px_per_mm, double prf_hz);

/// Sub-frame peak position of a sampled pulse (Gaussian fit when the three
/// samples around the maximum are positive, parabolic otherwise).
double peak_position(const float* samples, std::size_t n, std::size_t stride);

}  // namespace swe::metrics
