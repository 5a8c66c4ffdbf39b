// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "swe/nn/blocks.hpp"

namespace swe::nn {

enum class ReconMode { kFull, kPatch };

std::string to_string(ReconMode m);
ReconMode recon_mode_from_string(const std::string& s);

struct ReconConfig {
  ReconMode mode = ReconMode::kPatch;
  int64_t t = 70;
  int64_t a = 63;  ///< region rows (full) or patch rows ap (patch)
  int64_t l = 10;  ///< region columns (full) or patch columns lp (patch)
  int64_t base_channels = 16;
  int64_t convlstm_depth = 3;
  int64_t se_reduction = 4;
  int64_t paths = 6;
  double tukey_alpha = 0.5;
  std::string weights_uri;

  void validate() const;
  int64_t out_a() const;
  int64_t out_l() const;
  /// Architecture identity stored in checkpoints; excludes weights_uri and tukey_alpha.
  std::string fingerprint() const;
  /// Inverse of fingerprint(); throws DataError(kFingerprint) on foreign text.
  static ReconConfig from_fingerprint(const std::string& fp);
};

struct TemporalWindowPlan {
  int64_t s_paths = 6;
  int64_t t_len = 0;
  int64_t seg_len = 0;
  std::vector<std::pair<int64_t, int64_t>> segments;  ///< [start, end)
};

/// seg_len = ceil(2 t / (s + 1)); starts evenly spaced (rounded), last one ends at t.
TemporalWindowPlan plan_windows(int64_t t_len, int64_t s = 6);

/// Stacked ConvLSTM (3x3 kernels) over (N, C, t, A, L); returns the last layer's
/// hidden sequence with the same layout.
struct ConvLstmImpl : torch::nn::Module {
  ConvLstmImpl(int64_t in_ch, int64_t hidden, int64_t depth);
  torch::Tensor forward(const torch::Tensor& x);

  int64_t hidden;
  std::vector<torch::nn::Conv2d> wx, wh;
};
TORCH_MODULE(ConvLstm);

struct TemporalAttentionOutput {
  torch::Tensor out;    ///< (N, C, A, L)
  torch::Tensor alpha;  ///< (N, t), rows sum to 1
};

/// Dot-product attention over time: pooled per-step descriptors are projected
/// to keys, the last step is the query.
struct TemporalAttentionImpl : torch::nn::Module {
  explicit TemporalAttentionImpl(int64_t channels);
  TemporalAttentionOutput attend(const torch::Tensor& h);
  torch::Tensor forward(const torch::Tensor& h) { return attend(h).out; }

  torch::nn::Linear key{nullptr}, query{nullptr};
};
TORCH_MODULE(TemporalAttention);

struct FftAttentionOutput {
  torch::Tensor y;         ///< preconditioned features
  torch::Tensor spectrum;  ///< |DFT2(y)|
  torch::Tensor gate;      ///< (B, C, 1, 1) in (0, 1)
  torch::Tensor out;       ///< x + x * gate
};

struct FftAttentionImpl : torch::nn::Module {
  FftAttentionImpl(int64_t channels, int64_t se_reduction);
  FftAttentionOutput detail(const torch::Tensor& x);
  torch::Tensor forward(const torch::Tensor& x) { return detail(x).out; }

  static torch::Tensor magnitude(const torch::Tensor& y);

  ConvBnRelu2d pre1{nullptr}, pre2{nullptr}, post{nullptr};
  SqueezeExcite se{nullptr};
};
TORCH_MODULE(FftAttention);

struct NestedTrace {
  torch::Tensor paths;  ///< (B, S*C, A, L) concatenated TAM outputs, path-major
  torch::Tensor alpha;  ///< (B, S, seg_len)
  FftAttentionOutput fft;
  torch::Tensor out;    ///< (B, C, A, L)
};

/// Six overlapping temporal windows share one ConvLSTM + TAM; the collapsed
/// windows are stacked on channels, normalised, FFT-attended and mixed back to C.
struct NestedLstmBlockImpl : torch::nn::Module {
  NestedLstmBlockImpl(int64_t channels, int64_t paths, int64_t depth, int64_t se_reduction);
  NestedTrace trace(const torch::Tensor& x);
  torch::Tensor forward(const torch::Tensor& x) { return trace(x).out; }

  int64_t channels, paths;
  ConvLstm lstm{nullptr};
  TemporalAttention tam{nullptr};
  torch::nn::BatchNorm2d bn{nullptr};
  FftAttention fft{nullptr};
  torch::nn::Conv2d mix{nullptr};
};
TORCH_MODULE(NestedLstmBlock);

struct EncoderFeatures {
  torch::Tensor i0, i1, i2;
};

struct ReconTrace {
  EncoderFeatures enc;
  torch::Tensor p0, p1, p2;
  torch::Tensor p0_adj;  ///< P0 after the patch-mode lateral contraction (P0 itself in full mode)
  torch::Tensor d0, d1, d2;
  torch::Tensor out;
};

struct ReconNetImpl : torch::nn::Module {
  explicit ReconNetImpl(ReconConfig cfg);

  /// x: (B, 1, T, A, L) normalised motion.
  EncoderFeatures encode(const torch::Tensor& x);
  ReconTrace trace(const torch::Tensor& x);
  /// (B, 1, out_a, out_l) modulus in kPa / 100.
  torch::Tensor forward(const torch::Tensor& x) { return trace(x).out; }

  const ReconConfig& config() const { return cfg_; }

  ResBlock3d res0{nullptr}, res1{nullptr}, res2{nullptr};
  NestedLstmBlock nest0{nullptr}, nest1{nullptr}, nest2{nullptr};
  torch::nn::Conv2d p0_adjust{nullptr};
  ConvBnRelu2d up0{nullptr}, up1{nullptr}, up2{nullptr};
  SqueezeExcite se0{nullptr}, se1{nullptr};
  torch::nn::Conv2d head{nullptr};

 private:
  ReconConfig cfg_;
};
TORCH_MODULE(ReconNet);

}  // namespace swe::nn
