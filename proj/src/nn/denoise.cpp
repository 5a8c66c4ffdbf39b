// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#include "swe/nn/denoise.hpp"

#include <cstdio>
#include <sstream>

#include "swe/error.hpp"

namespace swe::nn {

namespace F = torch::nn::functional;

namespace {

constexpr double kMaskEps = 1e-6;
// Typical normalised modulus, so the ReLU head starts in its active range.
constexpr double kHeadBias = 0.25;

}  // namespace

void DenoiserConfig::validate() const {
  if (base_channels < 1 || se_reduction < 1) throw ConfigError("denoiser channels and SE reduction must be positive");
  for (auto b : blocks_per_stage)
    if (b < 1) throw ConfigError("every denoiser stage needs at least one block");
}

std::string DenoiserConfig::fingerprint() const {
  std::ostringstream os;
  os << "denoiser/1 c=" << base_channels << " blocks=" << blocks_per_stage[0] << "," << blocks_per_stage[1] << ","
     << blocks_per_stage[2] << " se=" << se_reduction;
  return os.str();
}

DenoiserConfig DenoiserConfig::from_fingerprint(const std::string& fp) {
  DenoiserConfig c;
  long long ch = 0, b0 = 0, b1 = 0, b2 = 0, se = 0;
  if (std::sscanf(fp.c_str(), "denoiser/1 c=%lld blocks=%lld,%lld,%lld se=%lld", &ch, &b0, &b1, &b2, &se) != 5)
    throw DataError(DataError::Kind::kFingerprint, "not a denoiser fingerprint: '" + fp + "'");
  c.base_channels = ch;
  c.blocks_per_stage = {b0, b1, b2};
  c.se_reduction = se;
  if (c.fingerprint() != fp) throw DataError(DataError::Kind::kFingerprint, "malformed fingerprint '" + fp + "'");
  return c;
}

int64_t padded_extent(int64_t n) { return (n + 7) / 8 * 8; }

DenoiserEncoderImpl::DenoiserEncoderImpl(const DenoiserConfig& cfg) {
  const int64_t c = cfg.base_channels;
  stem = register_module("stem", ConvBnRelu2d(1, c));
  int64_t in = c;
  for (std::size_t i = 0; i < 3; ++i) {
    const int64_t out = c << i;
    torch::nn::Sequential seq;
    for (int64_t b = 0; b < cfg.blocks_per_stage[i]; ++b) {
      seq->push_back(BasicBlock2d(b == 0 ? in : out, out));
    }
    stages[i] = register_module("stage" + std::to_string(i), seq);
    se[i] = register_module("se" + std::to_string(i), SqueezeExcite(out, cfg.se_reduction));
    in = out;
  }
}

std::array<torch::Tensor, 3> DenoiserEncoderImpl::forward(const torch::Tensor& x) {
  std::array<torch::Tensor, 3> j;
  auto h = stem(x);
  for (std::size_t i = 0; i < 3; ++i) {
    h = se[i](F::avg_pool2d(stages[i]->forward(h), F::AvgPool2dFuncOptions(2)));
    j[i] = h;
  }
  return j;
}

RegionDecoderImpl::RegionDecoderImpl(const DenoiserConfig& cfg) {
  const int64_t c = cfg.base_channels;
  up0 = register_module("up0", ConvBnRelu2d(4 * c, 2 * c));
  se0 = register_module("se0", SqueezeExcite(4 * c, cfg.se_reduction));
  up1 = register_module("up1", ConvBnRelu2d(4 * c, c));
  se1 = register_module("se1", SqueezeExcite(2 * c, cfg.se_reduction));
  up2 = register_module("up2", ConvBnRelu2d(2 * c, c));
  head = register_module("head", torch::nn::Conv2d(torch::nn::Conv2dOptions(c, 1, 3).padding(1)));
}

RegionDecoderOutput RegionDecoderImpl::forward(const std::array<torch::Tensor, 3>& j, int64_t rows, int64_t cols) {
  auto d = resize_to(up0(j[2]), j[1].size(2), j[1].size(3));
  d = se0(torch::cat({d, j[1]}, 1));
  d = resize_to(up1(d), j[0].size(2), j[0].size(3));
  d = se1(torch::cat({d, j[0]}, 1));
  d = resize_to(up2(d), 2 * j[0].size(2), 2 * j[0].size(3));
  RegionDecoderOutput out;
  out.d2 = d.narrow(2, 0, rows).narrow(3, 0, cols);
  out.y_area = torch::relu(head(out.d2));
  return out;
}

FusionImpl::FusionImpl(int64_t c)
    : bn(2 * c),
      reduce0(torch::nn::Conv2dOptions(2 * c, c, 3).padding(1)),
      reduce1(torch::nn::Conv2dOptions(c, c, 3).padding(1)),
      reduce2(torch::nn::Conv2dOptions(c, 1, 3).padding(1)),
      mask0(torch::nn::Conv2dOptions(c, c, 3).padding(1)),
      mask1(torch::nn::Conv2dOptions(c, 1, 3).padding(1)) {
  register_module("bn", bn);
  register_module("reduce0", reduce0);
  register_module("reduce1", reduce1);
  register_module("reduce2", reduce2);
  register_module("mask0", mask0);
  register_module("mask1", mask1);
  torch::NoGradGuard ng;
  reduce2->bias.fill_(kHeadBias);
}

FusionOutput FusionImpl::forward(const torch::Tensor& d2_fg, const torch::Tensor& d2_bg) {
  if (!d2_fg.sizes().equals(d2_bg.sizes()))
    throw DataError(DataError::Kind::kShape, "fusion: foreground and background features differ in shape");
  auto pre0 = torch::relu(reduce0(bn(torch::cat({d2_fg, d2_bg}, 1))));
  auto pre1 = torch::relu(reduce1(pre0));
  FusionOutput out;
  out.y = torch::relu(reduce2(pre1));
  out.m = torch::sigmoid(mask1(torch::relu(mask0(pre1)))).clamp(kMaskEps, 1.0 - kMaskEps);
  return out;
}

DenoiserNetImpl::DenoiserNetImpl(DenoiserConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  encoder = register_module("encoder", DenoiserEncoder(cfg_));
  fg = register_module("fg", RegionDecoder(cfg_));
  bg = register_module("bg", RegionDecoder(cfg_));
  fusion = register_module("fusion", Fusion(cfg_.base_channels));
}

DenoiserOutputs DenoiserNetImpl::forward(const torch::Tensor& y_prime) {
  if (y_prime.dim() != 4 || y_prime.size(1) != 1) {
    std::ostringstream os;
    os << "denoiser input must be (B, 1, A, L), got " << y_prime.sizes();
    throw DataError(DataError::Kind::kShape, os.str());
  }
  const int64_t rows = y_prime.size(2), cols = y_prime.size(3);
  const int64_t pr = padded_extent(rows) - rows, pc = padded_extent(cols) - cols;
  auto x = (pr || pc) ? F::pad(y_prime, F::PadFuncOptions({0, pc, 0, pr})) : y_prime;
  const auto j = encoder(x);
  auto f = fg(j, rows, cols);
  auto b = bg(j, rows, cols);
  auto fused = fusion(f.d2, b.d2);
  return {fused.y, fused.m, f.y_area, b.y_area};
}

}  // namespace swe::nn
