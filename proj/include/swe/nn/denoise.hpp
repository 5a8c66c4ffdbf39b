// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "swe/nn/blocks.hpp"

namespace swe::nn {

struct DenoiserConfig {
  int64_t base_channels = 64;
  std::array<int64_t, 3> blocks_per_stage{3, 4, 6};
  int64_t se_reduction = 4;
  std::string weights_uri;

  void validate() const;
  std::string fingerprint() const;
  static DenoiserConfig from_fingerprint(const std::string& fp);
};

/// All maps (B, 1, A, L) in kPa / 100 except m, which is a soft mask in (0, 1).
struct DenoiserOutputs {
  torch::Tensor y, m, y_fg, y_bg;
};

struct DenoiserEncoderImpl : torch::nn::Module {
  explicit DenoiserEncoderImpl(const DenoiserConfig& cfg);
  /// j_i has 2^i C channels at 1 / 2^(i+1) of the input size. Input dims must be multiples of 8.
  std::array<torch::Tensor, 3> forward(const torch::Tensor& x);

  ConvBnRelu2d stem{nullptr};
  std::array<torch::nn::Sequential, 3> stages;
  std::array<SqueezeExcite, 3> se{nullptr, nullptr, nullptr};
};
TORCH_MODULE(DenoiserEncoder);

struct RegionDecoderOutput {
  torch::Tensor d2;      ///< (B, C, A, L) feature before the head
  torch::Tensor y_area;  ///< (B, 1, A, L), non-negative
};

struct RegionDecoderImpl : torch::nn::Module {
  explicit RegionDecoderImpl(const DenoiserConfig& cfg);
  /// Decodes to (rows, cols), cropping any padding away.
  RegionDecoderOutput forward(const std::array<torch::Tensor, 3>& j, int64_t rows, int64_t cols);

  ConvBnRelu2d up0{nullptr}, up1{nullptr}, up2{nullptr};
  SqueezeExcite se0{nullptr}, se1{nullptr};
  torch::nn::Conv2d head{nullptr};
};
TORCH_MODULE(RegionDecoder);

struct FusionOutput {
  torch::Tensor y, m;
};

struct FusionImpl : torch::nn::Module {
  explicit FusionImpl(int64_t channels);
  FusionOutput forward(const torch::Tensor& d2_fg, const torch::Tensor& d2_bg);

  torch::nn::BatchNorm2d bn{nullptr};
  torch::nn::Conv2d reduce0{nullptr}, reduce1{nullptr}, reduce2{nullptr};
  torch::nn::Conv2d mask0{nullptr}, mask1{nullptr};
};
TORCH_MODULE(Fusion);

struct DenoiserNetImpl : torch::nn::Module {
  explicit DenoiserNetImpl(DenoiserConfig cfg);
  /// y_prime: (B, 1, A, L). Pads right/bottom with zeros to multiples of 8 internally.
  DenoiserOutputs forward(const torch::Tensor& y_prime);

  const DenoiserConfig& config() const { return cfg_; }

  DenoiserEncoder encoder{nullptr};
  RegionDecoder fg{nullptr}, bg{nullptr};
  Fusion fusion{nullptr};

 private:
  DenoiserConfig cfg_;
};
TORCH_MODULE(DenoiserNet);

/// Smallest multiple of 8 that is >= n.
int64_t padded_extent(int64_t n);

}  // namespace swe::nn
