// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <torch/torch.h>

namespace swe::nn {

/// Conv2d(3x3, same padding) -> BatchNorm2d -> optional ReLU.
struct ConvBnRelu2dImpl : torch::nn::Module {
  ConvBnRelu2dImpl(int64_t in, int64_t out, bool relu = true, int64_t kernel = 3);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Conv2d conv{nullptr};
  torch::nn::BatchNorm2d bn{nullptr};
  bool relu;
};
TORCH_MODULE(ConvBnRelu2d);

/// Squeeze-and-excite channel gate: global average pool -> C/r -> ReLU -> C -> sigmoid.
struct SqueezeExciteImpl : torch::nn::Module {
  SqueezeExciteImpl(int64_t channels, int64_t reduction);
  /// Gate in (0, 1), shape (B, C, 1, 1).
  torch::Tensor gate(const torch::Tensor& x);
  /// x scaled by its own gate.
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Linear fc1{nullptr}, fc2{nullptr};
};
TORCH_MODULE(SqueezeExcite);

/// 3D basic residual block; a 1x1x1 projection matches channels on the skip path.
struct ResBlock3dImpl : torch::nn::Module {
  ResBlock3dImpl(int64_t in, int64_t out);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Conv3d conv1{nullptr}, conv2{nullptr}, proj{nullptr};
  torch::nn::BatchNorm3d bn1{nullptr}, bn2{nullptr}, proj_bn{nullptr};
};
TORCH_MODULE(ResBlock3d);

/// 2D ResNet basic block (two 3x3 convs), projection skip when channels change.
struct BasicBlock2dImpl : torch::nn::Module {
  BasicBlock2dImpl(int64_t in, int64_t out);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr}, proj{nullptr};
  torch::nn::BatchNorm2d bn1{nullptr}, bn2{nullptr}, proj_bn{nullptr};
};
TORCH_MODULE(BasicBlock2d);

/// Max pooling over (T, A, L) with kernel == stride. Time uses floor division,
/// space uses ceil division (edge-replicated so partial windows see real values).
torch::Tensor max_pool_time_floor_space_ceil(const torch::Tensor& x, int64_t kt, int64_t ka, int64_t kl);

/// Bilinear resize of the last two dims; identity when already that size.
torch::Tensor resize_to(const torch::Tensor& x, int64_t rows, int64_t cols);

}  // namespace swe::nn
