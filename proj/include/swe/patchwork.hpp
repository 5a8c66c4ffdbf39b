// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "swe/grid.hpp"
#include "swe/phantom.hpp"

namespace swe {

/// Separable taper used to blend overlapping predictions.
struct Window2D {
  Grid2<double> weights;
  double alpha_axial = 0.5;
  double alpha_lateral = 0.5;
};

/// Tukey (cosine-tapered) window sampled at pixel centres x = (i + 0.5) / n,
/// so no sample is exactly zero. alpha = 0 is rectangular, alpha = 1 is Hann.
std::vector<double> tukey1d(std::size_t n, double alpha);
Window2D tukey2d(std::size_t rows, std::size_t cols, double alpha);
Window2D tukey2d(std::size_t rows, std::size_t cols, double alpha_axial, double alpha_lateral);

/// Output footprint of a patch-mode network: ceil(ap / 3) x (ceil(lp / 2) - 1).
std::size_t patch_out_axial(std::size_t ap);
std::size_t patch_out_lateral(std::size_t lp);

struct Anchor {
  std::size_t a = 0;
  std::size_t l = 0;
  friend bool operator==(const Anchor&, const Anchor&) = default;
};

/// Patch placement over one region. Anchors are top-left corners in the
/// coordinates of the (possibly padded) volume the patches are cut from; the
/// output footprint sits centred inside each input patch.
struct PatchGrid {
  std::size_t ap = 63;
  std::size_t lp = 10;
  std::size_t out_a = 21;
  std::size_t out_l = 4;
  std::size_t stride_a = 10;
  std::size_t stride_l = 2;
  std::size_t pad_a = 0;  ///< rows added above the region
  std::size_t pad_l = 0;  ///< columns added left of the region
  std::size_t pad_a_after = 0;
  std::size_t pad_l_after = 0;
  std::vector<Anchor> anchors;

  std::size_t offset_a() const { return (ap - out_a) / 2; }
  std::size_t offset_l() const { return (lp - out_l) / 2; }
  /// Footprint top-left in region coordinates; valid when the footprint is in the region.
  Anchor footprint_origin(const Anchor& anchor) const;
};

/// In-bounds anchors stepping by the stride; the last anchor on each axis is
/// clamped to the far edge.
PatchGrid make_patch_grid(std::size_t region_a, std::size_t region_l, std::size_t ap, std::size_t lp,
                          std::size_t stride_a, std::size_t stride_l);

/// Grid over a region replicate-padded by the footprint offsets so that the
/// footprints cover every region pixel. Zero strides default to half the
/// footprint (at least 50% overlap).
PatchGrid make_covering_grid(std::size_t region_a, std::size_t region_l, std::size_t ap,
                             std::size_t lp, std::size_t stride_a = 0, std::size_t stride_l = 0);

Grid3<float> pad_replicate(const Grid3<float>& vol, std::size_t before_a, std::size_t after_a,
                           std::size_t before_l, std::size_t after_l);
/// Pads a region volume the way `grid` expects (no-op for unpadded grids).
Grid3<float> pad_for_grid(const Grid3<float>& vol, const PatchGrid& grid);

struct Patch {
  Anchor anchor;
  Grid3<float> data;  ///< T x ap x lp
};

/// Throws ConfigError when an anchor does not fit inside the volume.
std::vector<Patch> extract_patches(const Grid3<float>& vol, const PatchGrid& grid);
std::vector<Patch> extract_patches(const MotionVolume& vol, const PatchGrid& grid);

struct PatchPrediction {
  Anchor origin;  ///< footprint top-left in region coordinates
  Map2 values;
};

/// Window-weighted sum normalised by accumulated weight. Throws
/// DataError(kCoverage) listing uncovered pixels.
Map2 overlap_add(std::span<const PatchPrediction> predictions, std::size_t rows, std::size_t cols,
                 const Window2D& window);

/// Lateral windowed merge of R region maps into the full ROI.
Map2 merge_regions(std::span<const Map2> region_maps, const RegionLayout& layout,
                   const Window2D& window);

}  // namespace swe
