// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#include "swe/nn/blocks.hpp"

namespace swe::nn {

namespace F = torch::nn::functional;

ConvBnRelu2dImpl::ConvBnRelu2dImpl(int64_t in, int64_t out, bool relu, int64_t kernel)
    : conv(torch::nn::Conv2dOptions(in, out, kernel).padding(kernel / 2)),
      bn(torch::nn::BatchNorm2dOptions(out)),
      relu(relu) {
  register_module("conv", conv);
  register_module("bn", bn);
}

torch::Tensor ConvBnRelu2dImpl::forward(const torch::Tensor& x) {
  auto y = bn(conv(x));
  return relu ? torch::relu(y) : y;
}

SqueezeExciteImpl::SqueezeExciteImpl(int64_t channels, int64_t reduction)
    : fc1(channels, std::max<int64_t>(1, channels / reduction)),
      fc2(std::max<int64_t>(1, channels / reduction), channels) {
  register_module("fc1", fc1);
  register_module("fc2", fc2);
}

torch::Tensor SqueezeExciteImpl::gate(const torch::Tensor& x) {
  auto s = x.mean({2, 3});
  s = torch::sigmoid(fc2(torch::relu(fc1(s))));
  return s.unsqueeze(-1).unsqueeze(-1);
}

torch::Tensor SqueezeExciteImpl::forward(const torch::Tensor& x) { return x * gate(x); }

ResBlock3dImpl::ResBlock3dImpl(int64_t in, int64_t out)
    : conv1(torch::nn::Conv3dOptions(in, out, 3).padding(1).bias(false)),
      conv2(torch::nn::Conv3dOptions(out, out, 3).padding(1).bias(false)),
      bn1(out),
      bn2(out) {
  register_module("conv1", conv1);
  register_module("bn1", bn1);
  register_module("conv2", conv2);
  register_module("bn2", bn2);
  if (in != out) {
    proj = register_module("proj", torch::nn::Conv3d(torch::nn::Conv3dOptions(in, out, 1).bias(false)));
    proj_bn = register_module("proj_bn", torch::nn::BatchNorm3d(out));
  }
}

torch::Tensor ResBlock3dImpl::forward(const torch::Tensor& x) {
  auto y = bn2(conv2(torch::relu(bn1(conv1(x)))));
  auto skip = proj ? proj_bn(proj(x)) : x;
  return torch::relu(y + skip);
}

BasicBlock2dImpl::BasicBlock2dImpl(int64_t in, int64_t out)
    : conv1(torch::nn::Conv2dOptions(in, out, 3).padding(1).bias(false)),
      conv2(torch::nn::Conv2dOptions(out, out, 3).padding(1).bias(false)),
      bn1(out),
      bn2(out) {
  register_module("conv1", conv1);
  register_module("bn1", bn1);
  register_module("conv2", conv2);
  register_module("bn2", bn2);
  if (in != out) {
    proj = register_module("proj", torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 1).bias(false)));
    proj_bn = register_module("proj_bn", torch::nn::BatchNorm2d(out));
  }
}

torch::Tensor BasicBlock2dImpl::forward(const torch::Tensor& x) {
  auto y = bn2(conv2(torch::relu(bn1(conv1(x)))));
  auto skip = proj ? proj_bn(proj(x)) : x;
  return torch::relu(y + skip);
}

torch::Tensor max_pool_time_floor_space_ceil(const torch::Tensor& x, int64_t kt, int64_t ka, int64_t kl) {
  const int64_t a = x.size(3);
  const int64_t l = x.size(4);
  const int64_t pad_a = (ka - a % ka) % ka;
  const int64_t pad_l = (kl - l % kl) % kl;
  auto padded = x;
  if (pad_a || pad_l) {
    // replicate padding wants (N, C, D, H, W) and pads (W_left, W_right, H_top, H_bottom, D_front, D_back)
    padded = F::pad(x, F::PadFuncOptions({0, pad_l, 0, pad_a, 0, 0}).mode(torch::kReplicate));
  }
  return F::max_pool3d(padded, F::MaxPool3dFuncOptions({kt, ka, kl}).stride({kt, ka, kl}));
}

torch::Tensor resize_to(const torch::Tensor& x, int64_t rows, int64_t cols) {
  if (x.size(-2) == rows && x.size(-1) == cols) return x;
  return F::interpolate(x, F::InterpolateFuncOptions()
                               .size(std::vector<int64_t>{rows, cols})
                               .mode(torch::kBilinear)
                               .align_corners(false));
}

}  // namespace swe::nn
