// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>

#include <torch/torch.h>

#include "swe/nn/denoise.hpp"

// Maps are (A, L) or (..., A, L); leading dims are treated as a batch and
// every term is averaged over it.
namespace swe::nn::loss {

inline constexpr double kEps = 1e-8;

torch::Tensor recon_mae(const torch::Tensor& y_pred, const torch::Tensor& y_gt);

struct DenoiseTerms {
  torch::Tensor total, fg1, fg2, bg1, bg2, l_fg, l_bg;
};
/// Throws DataError if m_gt is not binary.
DenoiseTerms denoise_loss(const torch::Tensor& y_fg, const torch::Tensor& y_bg, const torch::Tensor& y_gt,
                          const torch::Tensor& m_gt, double alpha1, double alpha2);

struct FusionTerms {
  torch::Tensor total, mae, ncc_term, s_ncc;
};
FusionTerms fusion_loss(const torch::Tensor& y, const torch::Tensor& y_gt, double beta1, double beta2,
                        double eps = kEps);

struct TvTerms {
  torch::Tensor total, axial, lateral;
};
TvTerms tv_loss(const torch::Tensor& y);

torch::Tensor iou_loss(const torch::Tensor& m_pred, const torch::Tensor& m_gt, double eps = kEps);

struct LossWeights {
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double beta1 = 1.0;
  double beta2 = 50.0;
  double gamma = 10.0;
  double mu = 1.0;
  double kappa = 0.5;
  std::string ratio_source;

  /// alpha2 = 1, alpha1 = bg_fg_ratio, beta1 = kappa (alpha1 + alpha2).
  static LossWeights from_ratio(double bg_fg_ratio, double kappa = 0.5, double beta2 = 50.0, double gamma = 10.0,
                                double mu = 1.0, std::string ratio_source = {});
  void validate() const;
};

struct CompoundTerms {
  torch::Tensor total;
  DenoiseTerms denoise;
  FusionTerms fusion;
  TvTerms tv;
  torch::Tensor iou;

  std::map<std::string, double> breakdown() const;
};

CompoundTerms compound_loss(const DenoiserOutputs& out, const torch::Tensor& y_gt, const torch::Tensor& m_gt,
                            const LossWeights& w);

}  // namespace swe::nn::loss
