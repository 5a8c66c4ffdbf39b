// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#include "swe/nn/losses.hpp"

#include <cmath>
#include <sstream>

#include "swe/error.hpp"

namespace swe::nn::loss {

namespace {

void same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* who) {
  if (!a.sizes().equals(b.sizes())) {
    std::ostringstream os;
    os << who << ": shape mismatch " << a.sizes() << " vs " << b.sizes();
    throw DataError(DataError::Kind::kShape, os.str());
  }
}

void need_2d(const torch::Tensor& t, const char* who) {
  if (t.dim() < 2) throw DataError(DataError::Kind::kShape, std::string(who) + ": need at least 2 dims");
}

// (N, A, L) view with all leading dims folded into N.
torch::Tensor batched(const torch::Tensor& t) { return t.reshape({-1, t.size(-2), t.size(-1)}); }

// Per-sample sum over the map, averaged over the batch.
torch::Tensor l1_mean(const torch::Tensor& t) { return batched(t).abs().sum({1, 2}).mean(); }

double pixels(const torch::Tensor& t) { return static_cast<double>(t.size(-2) * t.size(-1)); }

}  // namespace

torch::Tensor recon_mae(const torch::Tensor& y_pred, const torch::Tensor& y_gt) {
  same_shape(y_pred, y_gt, "recon_mae");
  need_2d(y_pred, "recon_mae");
  return l1_mean(y_gt - y_pred) / pixels(y_pred);
}

DenoiseTerms denoise_loss(const torch::Tensor& y_fg, const torch::Tensor& y_bg, const torch::Tensor& y_gt,
                          const torch::Tensor& m_gt, double alpha1, double alpha2) {
  same_shape(y_fg, y_gt, "denoise_loss");
  same_shape(y_bg, y_gt, "denoise_loss");
  same_shape(m_gt, y_gt, "denoise_loss");
  need_2d(y_gt, "denoise_loss");
  if (!torch::logical_or(m_gt == 0, m_gt == 1).all().item<bool>())
    throw DataError("denoise_loss: ground-truth mask must be binary");
  const auto inv = 1 - m_gt;
  const double n = pixels(y_gt);
  DenoiseTerms t;
  t.fg1 = l1_mean((y_fg - y_gt) * m_gt);
  t.fg2 = l1_mean(y_fg * inv);
  t.bg1 = l1_mean((y_bg - y_gt) * inv);
  t.bg2 = l1_mean(y_bg * m_gt);
  t.l_fg = (t.fg1 + t.fg2) / n;
  t.l_bg = (t.bg1 + t.bg2) / n;
  t.total = alpha1 * t.l_fg + alpha2 * t.l_bg;
  return t;
}

FusionTerms fusion_loss(const torch::Tensor& y, const torch::Tensor& y_gt, double beta1, double beta2, double eps) {
  same_shape(y, y_gt, "fusion_loss");
  need_2d(y, "fusion_loss");
  const auto p = batched(y), g = batched(y_gt);
  FusionTerms t;
  t.mae = recon_mae(y, y_gt);
  const auto num = (g * p).sum({1, 2});
  const auto den = torch::sqrt((g * g).sum({1, 2}) * (p * p).sum({1, 2})) + eps;
  t.s_ncc = (num / den).mean();
  t.ncc_term = 1 - t.s_ncc;
  t.total = beta1 * t.mae + beta2 * t.ncc_term;
  return t;
}

TvTerms tv_loss(const torch::Tensor& y) {
  need_2d(y, "tv_loss");
  const int64_t a = y.size(-2), l = y.size(-1);
  if (a < 2 || l < 2) throw DataError(DataError::Kind::kShape, "tv_loss: both axes need at least 2 samples");
  const auto b = batched(y);
  TvTerms t;
  const auto da = b.narrow(1, 0, a - 1) - b.narrow(1, 1, a - 1);
  const auto dl = b.narrow(2, 0, l - 1) - b.narrow(2, 1, l - 1);
  t.axial = (da * da).sum({1, 2}).mean() / static_cast<double>(a - 1);
  t.lateral = (dl * dl).sum({1, 2}).mean() / static_cast<double>(l - 1);
  t.total = t.axial + t.lateral;
  return t;
}

torch::Tensor iou_loss(const torch::Tensor& m_pred, const torch::Tensor& m_gt, double eps) {
  same_shape(m_pred, m_gt, "iou_loss");
  need_2d(m_pred, "iou_loss");
  const auto p = batched(m_pred), g = batched(m_gt);
  const auto inter = (p * g).sum({1, 2});
  const auto uni = (p + g - p * g).sum({1, 2});
  return (1 - inter / (uni + eps)).mean();
}

LossWeights LossWeights::from_ratio(double bg_fg_ratio, double kappa, double beta2, double gamma, double mu,
                                    std::string ratio_source) {
  LossWeights w;
  w.alpha2 = 1.0;
  w.alpha1 = bg_fg_ratio;
  w.kappa = kappa;
  w.beta1 = kappa * (w.alpha1 + w.alpha2);
  w.beta2 = beta2;
  w.gamma = gamma;
  w.mu = mu;
  w.ratio_source = std::move(ratio_source);
  w.validate();
  return w;
}

void LossWeights::validate() const {
  if (!(kappa > 0.0 && kappa <= 1.0)) throw ConfigError("kappa must lie in (0, 1]");
  if (!(alpha1 > 0.0 && alpha2 > 0.0)) throw ConfigError("alpha1 and alpha2 must be positive");
  if (std::abs(beta1 - kappa * (alpha1 + alpha2)) > 1e-9 * std::max(1.0, beta1))
    throw ConfigError("beta1 must equal kappa * (alpha1 + alpha2)");
  if (beta2 < 0.0 || gamma < 0.0 || mu < 0.0) throw ConfigError("beta2, gamma and mu must be non-negative");
}

std::map<std::string, double> CompoundTerms::breakdown() const {
  auto v = [](const torch::Tensor& t) { return t.item<double>(); };
  return {{"total", v(total)},         {"denoise", v(denoise.total)}, {"l_fg", v(denoise.l_fg)},
          {"l_bg", v(denoise.l_bg)},   {"fusion", v(fusion.total)},   {"fusion_mae", v(fusion.mae)},
          {"fusion_ncc", v(fusion.ncc_term)}, {"tv", v(tv.total)},    {"iou", v(iou)}};
}

CompoundTerms compound_loss(const DenoiserOutputs& out, const torch::Tensor& y_gt, const torch::Tensor& m_gt,
                            const LossWeights& w) {
  w.validate();
  CompoundTerms t;
  t.denoise = denoise_loss(out.y_fg, out.y_bg, y_gt, m_gt, w.alpha1, w.alpha2);
  t.fusion = fusion_loss(out.y, y_gt, w.beta1, w.beta2);
  t.tv = tv_loss(out.y);
  t.iou = iou_loss(out.m, m_gt);
  t.total = t.denoise.total + t.fusion.total + w.gamma * t.tv.total + w.mu * t.iou;
  return t;
}

}  // namespace swe::nn::loss
