// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#include "swe/patchwork.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "swe/error.hpp"

namespace swe {

namespace {

std::vector<std::size_t> positions(std::size_t extent, std::size_t size, std::size_t stride) {
  if (size > extent) throw ConfigError("patch grid: patch larger than region");
  if (stride == 0) throw ConfigError("patch grid: stride must be positive");
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p + size <= extent; p += stride) out.push_back(p);
  if (out.back() + size < extent) out.push_back(extent - size);
  return out;
}

std::vector<Anchor> cartesian(const std::vector<std::size_t>& as, const std::vector<std::size_t>& ls) {
  std::vector<Anchor> out;
  out.reserve(as.size() * ls.size());
  for (auto a : as)
    for (auto l : ls) out.push_back({a, l});
  return out;
}

}  // namespace

std::vector<double> tukey1d(std::size_t n, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("tukey: alpha must lie in [0, 1]");
  if (n == 0) throw ConfigError("tukey: length must be positive");
  std::vector<double> w(n, 1.0);
  if (alpha == 0.0) return w;
  constexpr double pi = std::numbers::pi;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    if (x < alpha / 2)
      w[i] = 0.5 * (1.0 + std::cos(pi * (2.0 * x / alpha - 1.0)));
    else if (x > 1.0 - alpha / 2)
      w[i] = 0.5 * (1.0 + std::cos(pi * (2.0 * x / alpha - 2.0 / alpha + 1.0)));
  }
  return w;
}

Window2D tukey2d(std::size_t rows, std::size_t cols, double alpha) {
  return tukey2d(rows, cols, alpha, alpha);
}

Window2D tukey2d(std::size_t rows, std::size_t cols, double alpha_axial, double alpha_lateral) {
  const auto wa = tukey1d(rows, alpha_axial);
  const auto wl = tukey1d(cols, alpha_lateral);
  Window2D win{Grid2<double>(rows, cols), alpha_axial, alpha_lateral};
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) win.weights(r, c) = wa[r] * wl[c];
  return win;
}

std::size_t patch_out_axial(std::size_t ap) { return (ap + 2) / 3; }

std::size_t patch_out_lateral(std::size_t lp) {
  if (lp < 3) throw ConfigError("patch: lateral patch size must be at least 3");
  return (lp + 1) / 2 - 1;
}

Anchor PatchGrid::footprint_origin(const Anchor& anchor) const {
  return {anchor.a + offset_a() - pad_a, anchor.l + offset_l() - pad_l};
}

PatchGrid make_patch_grid(std::size_t region_a, std::size_t region_l, std::size_t ap, std::size_t lp,
                          std::size_t stride_a, std::size_t stride_l) {
  PatchGrid g;
  g.ap = ap;
  g.lp = lp;
  g.out_a = patch_out_axial(ap);
  g.out_l = patch_out_lateral(lp);
  g.stride_a = stride_a;
  g.stride_l = stride_l;
  g.anchors = cartesian(positions(region_a, ap, stride_a), positions(region_l, lp, stride_l));
  return g;
}

PatchGrid make_covering_grid(std::size_t region_a, std::size_t region_l, std::size_t ap,
                             std::size_t lp, std::size_t stride_a, std::size_t stride_l) {
  PatchGrid g;
  g.ap = ap;
  g.lp = lp;
  g.out_a = patch_out_axial(ap);
  g.out_l = patch_out_lateral(lp);
  g.stride_a = stride_a ? stride_a : std::max<std::size_t>(1, g.out_a / 2);
  g.stride_l = stride_l ? stride_l : std::max<std::size_t>(1, g.out_l / 2);
  g.pad_a = g.offset_a();
  g.pad_l = g.offset_l();
  g.pad_a_after = ap - g.out_a - g.pad_a;
  g.pad_l_after = lp - g.out_l - g.pad_l;
  const std::size_t padded_a = region_a + ap - g.out_a;
  const std::size_t padded_l = region_l + lp - g.out_l;
  g.anchors = cartesian(positions(padded_a, ap, g.stride_a), positions(padded_l, lp, g.stride_l));
  return g;
}

Grid3<float> pad_replicate(const Grid3<float>& vol, std::size_t before_a, std::size_t after_a,
                           std::size_t before_l, std::size_t after_l) {
  const auto [t_n, a_n, l_n] = vol.dims();
  const std::size_t a_out = a_n + before_a + after_a;
  const std::size_t l_out = l_n + before_l + after_l;
  auto source = [](std::size_t i, std::size_t before, std::size_t n) {
    return i < before ? 0 : std::min(i - before, n - 1);
  };
  Grid3<float> out(t_n, a_out, l_out);
  for (std::size_t t = 0; t < t_n; ++t)
    for (std::size_t a = 0; a < a_out; ++a) {
      const std::size_t sa = source(a, before_a, a_n);
      for (std::size_t l = 0; l < l_out; ++l) out(t, a, l) = vol(t, sa, source(l, before_l, l_n));
    }
  return out;
}

Grid3<float> pad_for_grid(const Grid3<float>& vol, const PatchGrid& grid) {
  if (grid.pad_a + grid.pad_a_after + grid.pad_l + grid.pad_l_after == 0) return vol;
  return pad_replicate(vol, grid.pad_a, grid.pad_a_after, grid.pad_l, grid.pad_l_after);
}

std::vector<Patch> extract_patches(const Grid3<float>& vol, const PatchGrid& grid) {
  const auto [t_n, a_n, l_n] = vol.dims();
  std::vector<Patch> out;
  out.reserve(grid.anchors.size());
  for (const auto& anchor : grid.anchors) {
    if (anchor.a + grid.ap > a_n || anchor.l + grid.lp > l_n) {
      std::ostringstream os;
      os << "extract_patches: anchor (" << anchor.a << "," << anchor.l << ") with patch " << grid.ap
         << "x" << grid.lp << " exceeds volume " << a_n << "x" << l_n;
      throw ConfigError(os.str());
    }
    Patch p{anchor, Grid3<float>(t_n, grid.ap, grid.lp)};
    for (std::size_t t = 0; t < t_n; ++t)
      for (std::size_t a = 0; a < grid.ap; ++a)
        for (std::size_t l = 0; l < grid.lp; ++l) p.data(t, a, l) = vol(t, anchor.a + a, anchor.l + l);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Patch> extract_patches(const MotionVolume& vol, const PatchGrid& grid) {
  return extract_patches(vol.data, grid);
}

Map2 overlap_add(std::span<const PatchPrediction> predictions, std::size_t rows, std::size_t cols,
                 const Window2D& window) {
  Grid2<double> acc(rows, cols, 0.0);
  Grid2<double> weight(rows, cols, 0.0);
  for (const auto& p : predictions) {
    if (!p.values.same_shape(Map2(window.weights.rows(), window.weights.cols())))
      throw DataError(DataError::Kind::kShape, "overlap_add: prediction and window shapes differ");
    if (p.origin.a + p.values.rows() > rows || p.origin.l + p.values.cols() > cols)
      throw DataError(DataError::Kind::kShape, "overlap_add: footprint outside region");
    for (std::size_t r = 0; r < p.values.rows(); ++r)
      for (std::size_t c = 0; c < p.values.cols(); ++c) {
        const double w = window.weights(r, c);
        acc(p.origin.a + r, p.origin.l + c) += w * p.values(r, c);
        weight(p.origin.a + r, p.origin.l + c) += w;
      }
  }
  Map2 out(rows, cols);
  std::vector<std::pair<std::size_t, std::size_t>> holes;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      if (weight(r, c) > 0.0)
        out(r, c) = static_cast<float>(acc(r, c) / weight(r, c));
      else
        holes.emplace_back(r, c);
    }
  if (!holes.empty()) {
    std::ostringstream os;
    os << "overlap_add: " << holes.size() << " uncovered pixel(s):";
    for (std::size_t i = 0; i < std::min<std::size_t>(holes.size(), 8); ++i)
      os << " (" << holes[i].first << "," << holes[i].second << ")";
    if (holes.size() > 8) os << " ...";
    throw DataError(DataError::Kind::kCoverage, os.str());
  }
  return out;
}

Map2 merge_regions(std::span<const Map2> region_maps, const RegionLayout& layout,
                   const Window2D& window) {
  if (region_maps.size() != layout.r_regions)
    throw DataError(DataError::Kind::kShape, "merge_regions: expected one map per region");
  std::vector<PatchPrediction> preds;
  preds.reserve(region_maps.size());
  for (std::size_t k = 0; k < region_maps.size(); ++k) {
    const auto& m = region_maps[k];
    if (m.rows() != layout.region_axial_px || m.cols() != layout.region_lateral_px)
      throw DataError(DataError::Kind::kShape, "merge_regions: region map shape mismatch");
    preds.push_back({{0, layout.lateral_offsets_px[k]}, m});
  }
  return overlap_add(preds, layout.region_axial_px, layout.full_lateral_px, window);
}

}  // namespace swe
