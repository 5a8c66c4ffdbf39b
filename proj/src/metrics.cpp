// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#include "swe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "swe/error.hpp"

namespace swe::metrics {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_same_shape(const Map2& a, const Map2& b, const char* who) {
  if (!a.same_shape(b)) throw DataError(DataError::Kind::kShape, std::string(who) + ": shape mismatch");
}

double positive_max(const Map2& m, const char* who) {
  const auto v = m.values();
  const double mx = v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
  if (!(mx > 0.0)) throw NumericError(std::string(who) + ": image maximum must be positive");
  return mx;
}

struct Pixel {
  double a;
  double l;
};

std::vector<Pixel> surface_points(const Mask2& mask, double sa, double sl) {
  const Mask2 s = surface(mask);
  std::vector<Pixel> out;
  for (std::size_t a = 0; a < s.rows(); ++a)
    for (std::size_t l = 0; l < s.cols(); ++l)
      if (s(a, l)) out.push_back({static_cast<double>(a) * sa, static_cast<double>(l) * sl});
  return out;
}

// d(u, S) for every u in `from`.
std::vector<double> directed(const std::vector<Pixel>& from, const std::vector<Pixel>& to) {
  std::vector<double> out;
  out.reserve(from.size());
  for (const auto& u : from) {
    double best = kInf;
    for (const auto& v : to) best = std::min(best, (u.a - v.a) * (u.a - v.a) + (u.l - v.l) * (u.l - v.l));
    out.push_back(std::sqrt(best));
  }
  return out;
}

std::size_t count(const Mask2& m) {
  std::size_t n = 0;
  for (auto v : m.values()) n += v ? 1 : 0;
  return n;
}

}  // namespace

double psnr(const Map2& truth, const Map2& estimate) {
  require_same_shape(truth, estimate, "psnr");
  const double mt = positive_max(truth, "psnr");
  const double me = positive_max(estimate, "psnr");
  double mse = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = truth.values()[i] / mt - estimate.values()[i] / me;
    mse += d * d;
  }
  mse /= static_cast<double>(truth.size());
  return mse == 0.0 ? kInf : -10.0 * std::log10(mse);
}

double psnr_masked(const Map2& truth, const Map2& estimate, const Mask2& mask, std::uint8_t label) {
  require_same_shape(truth, estimate, "psnr_masked");
  const double mt = positive_max(truth, "psnr_masked");
  const double me = positive_max(estimate, "psnr_masked");
  double mse = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if ((mask.values()[i] != 0) != (label != 0)) continue;
    const double d = truth.values()[i] / mt - estimate.values()[i] / me;
    mse += d * d;
    ++n;
  }
  if (n == 0) throw DataError("psnr_masked: region is empty");
  mse /= static_cast<double>(n);
  return mse == 0.0 ? kInf : -10.0 * std::log10(mse);
}

double cnr(const Map2& image, const Mask2& mask) {
  if (image.rows() != mask.rows() || image.cols() != mask.cols())
    throw DataError(DataError::Kind::kShape, "cnr: shape mismatch");
  double sum_fg = 0.0, sum_bg = 0.0;
  std::size_t n_fg = 0, n_bg = 0;
  for (std::size_t i = 0; i < image.size(); ++i) {
    if (mask.values()[i]) {
      sum_fg += image.values()[i];
      ++n_fg;
    } else {
      sum_bg += image.values()[i];
      ++n_bg;
    }
  }
  if (n_fg == 0 || n_bg == 0) throw DataError("cnr: mask needs both foreground and background");
  const double mu_fg = sum_fg / static_cast<double>(n_fg);
  const double mu_bg = sum_bg / static_cast<double>(n_bg);
  double var = 0.0;
  for (std::size_t i = 0; i < image.size(); ++i)
    if (!mask.values()[i]) var += (image.values()[i] - mu_bg) * (image.values()[i] - mu_bg);
  const double sigma = std::sqrt(var / static_cast<double>(n_bg));
  const double contrast = std::abs(mu_fg - mu_bg);
  if (contrast == 0.0) return -kInf;
  if (sigma == 0.0) return kInf;
  return 20.0 * std::log10(contrast / sigma);
}

double ssim(const Map2& truth, const Map2& estimate) {
  require_same_shape(truth, estimate, "ssim");
  const auto x = truth.values();
  const auto y = estimate.values();
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double vx = 0.0, vy = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    vx += (x[i] - mx) * (x[i] - mx);
    vy += (y[i] - my) * (y[i] - my);
    cov += (x[i] - mx) * (y[i] - my);
  }
  vx /= n;
  vy /= n;
  cov /= n;
  const auto [xlo, xhi] = std::minmax_element(x.begin(), x.end());
  const auto [ylo, yhi] = std::minmax_element(y.begin(), y.end());
  const double range = static_cast<double>(std::max(*xhi, *yhi)) - std::min(*xlo, *ylo);
  const double e1 = (0.01 * range) * (0.01 * range);
  const double e2 = (0.03 * range) * (0.03 * range);
  const double num = (2 * mx * my + e1) * (2 * cov + e2);
  const double den = (mx * mx + my * my + e1) * (vx + vy + e2);
  if (den == 0.0) return 1.0;  // both images identically zero
  return num / den;
}

RegionMae region_mae(const Map2& estimate, const Map2& truth, const Mask2& mask, double scale) {
  require_same_shape(estimate, truth, "region_mae");
  double fg = 0.0, bg = 0.0;
  std::size_t n_fg = 0, n_bg = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = std::abs(static_cast<double>(estimate.values()[i]) - truth.values()[i]);
    if (mask.values()[i]) {
      fg += d;
      ++n_fg;
    } else {
      bg += d;
      ++n_bg;
    }
  }
  if (n_fg == 0 || n_bg == 0) throw DataError("region_mae: mask needs both classes");
  return {scale * fg / static_cast<double>(n_fg), scale * bg / static_cast<double>(n_bg)};
}

Overlap iou_f1(const Mask2& prediction, const Mask2& truth) {
  if (prediction.rows() != truth.rows() || prediction.cols() != truth.cols())
    throw DataError(DataError::Kind::kShape, "iou_f1: shape mismatch");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool p = prediction.values()[i] != 0;
    const bool g = truth.values()[i] != 0;
    tp += p && g;
    fp += p && !g;
    fn += !p && g;
  }
  if (tp + fp + fn == 0) return {1.0, 1.0, true};
  return {static_cast<double>(tp) / static_cast<double>(tp + fp + fn),
          2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn), false};
}

Mask2 surface(const Mask2& mask) {
  Mask2 out(mask.rows(), mask.cols(), 0);
  const auto rows = static_cast<std::ptrdiff_t>(mask.rows());
  const auto cols = static_cast<std::ptrdiff_t>(mask.cols());
  auto bg = [&](std::ptrdiff_t a, std::ptrdiff_t l) {
    return a < 0 || l < 0 || a >= rows || l >= cols ||
           !mask(static_cast<std::size_t>(a), static_cast<std::size_t>(l));
  };
  for (std::ptrdiff_t a = 0; a < rows; ++a)
    for (std::ptrdiff_t l = 0; l < cols; ++l)
      if (!bg(a, l) && (bg(a - 1, l) || bg(a + 1, l) || bg(a, l - 1) || bg(a, l + 1)))
        out(static_cast<std::size_t>(a), static_cast<std::size_t>(l)) = 1;
  return out;
}

SurfaceDistance hd_assd(const Mask2& prediction, const Mask2& truth, double spacing_axial,
                        double spacing_lateral) {
  if (prediction.rows() != truth.rows() || prediction.cols() != truth.cols())
    throw DataError(DataError::Kind::kShape, "hd_assd: shape mismatch");
  const std::size_t n_pred = count(prediction);
  const std::size_t n_truth = count(truth);
  if (n_pred == 0 || n_truth == 0) throw DataError("hd_assd: masks must be non-empty");
  const auto sp = surface_points(prediction, spacing_axial, spacing_lateral);
  const auto st = surface_points(truth, spacing_axial, spacing_lateral);
  const auto d_tp = directed(st, sp);
  const auto d_pt = directed(sp, st);
  SurfaceDistance out;
  out.hd = std::max(*std::max_element(d_tp.begin(), d_tp.end()), *std::max_element(d_pt.begin(), d_pt.end()));
  double sum = 0.0;
  for (double d : d_tp) sum += d;
  for (double d : d_pt) sum += d;
  out.assd = sum / static_cast<double>(n_pred + n_truth);
  return out;
}

Mask2 binarize(const Map2& soft, float threshold) {
  Mask2 out(soft.rows(), soft.cols(), 0);
  for (std::size_t i = 0; i < soft.size(); ++i) out.values()[i] = soft.values()[i] >= threshold ? 1 : 0;
  return out;
}

double peak_position(const float* samples, std::size_t n, std::size_t stride) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (samples[i * stride] > samples[best * stride]) best = i;
  if (best == 0 || best + 1 == n) return static_cast<double>(best);
  const double ym = samples[(best - 1) * stride];
  const double y0 = samples[best * stride];
  const double yp = samples[(best + 1) * stride];
  double a = ym, b = y0, c = yp;
  if (ym > 0 && y0 > 0 && yp > 0) {
    a = std::log(ym);
    b = std::log(y0);
    c = std::log(yp);
  }
  const double den = a - 2 * b + c;
  if (den >= 0.0) return static_cast<double>(best);
  return static_cast<double>(best) + 0.5 * (a - c) / den;
}

TtpEstimate ttp_speed_estimate(const MotionVolume& vol, std::size_t depth_row, std::size_t x1,
                               std::size_t x2, double lateral_px_per_mm, double prf_hz) {
  const auto [frames, rows, cols] = vol.data.dims();
  if (depth_row >= rows || x1 >= cols || x2 >= cols || x1 >= x2)
    throw ConfigError("ttp: need depth_row in range and x1 < x2 inside the region");
  const std::size_t stride = rows * cols;
  const float* base = vol.data.values().data() + depth_row * cols;
  for (std::size_t x : {x1, x2}) {
    float lo = base[x], hi = base[x];
    for (std::size_t t = 1; t < frames; ++t) {
      lo = std::min(lo, base[t * stride + x]);
      hi = std::max(hi, base[t * stride + x]);
    }
    if (!(hi > lo)) throw NumericError("ttp: flat displacement trace, no peak to time");
  }
  const double frame_ms = 1e3 / prf_hz;
  TtpEstimate out;
  out.ttp1_ms = peak_position(base + x1, frames, stride) * frame_ms;
  out.ttp2_ms = peak_position(base + x2, frames, stride) * frame_ms;
  if (!(out.ttp2_ms > out.ttp1_ms))
    throw NumericError("ttp: non-monotone arrival (later column peaks first)");
  const double distance_mm = static_cast<double>(x2 - x1) / lateral_px_per_mm;
  out.speed_m_s = distance_mm / (out.ttp2_ms - out.ttp1_ms);
  return out;
}

}  // namespace swe::metrics
