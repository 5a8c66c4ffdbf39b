// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <torch/torch.h>

#include "swe/error.hpp"
#include "swe/nn/denoise.hpp"

using namespace swe;
using namespace swe::nn;

namespace {

std::vector<int64_t> shape(const torch::Tensor& t) { return t.sizes().vec(); }

DenoiserConfig small(int64_t c = 8) {
  DenoiserConfig dc;
  dc.base_channels = c;
  return dc;
}

}  // namespace

TEST_CASE("encoder scales", "[denoise][shape]") {
  torch::manual_seed(0);
  DenoiserEncoder enc(DenoiserConfig{});
  enc->eval();
  torch::NoGradGuard ng;
  const auto j = enc->forward(torch::rand({1, 1, 168, 40}));
  CHECK(shape(j[0]) == std::vector<int64_t>{1, 64, 84, 20});
  CHECK(shape(j[1]) == std::vector<int64_t>{1, 128, 42, 10});
  CHECK(shape(j[2]) == std::vector<int64_t>{1, 256, 21, 5});
}

TEST_CASE("padding policy", "[denoise][shape]") {
  CHECK(padded_extent(170) == 176);
  CHECK(padded_extent(41) == 48);
  CHECK(padded_extent(168) == 168);

  torch::manual_seed(1);
  DenoiserNet net(small());
  net->eval();
  torch::NoGradGuard ng;
  const auto out = net->forward(torch::rand({2, 1, 170, 41}));
  for (const auto& t : {out.y, out.m, out.y_fg, out.y_bg}) {
    CHECK(shape(t) == std::vector<int64_t>{2, 1, 170, 41});
    CHECK(torch::isfinite(t).all().item<bool>());
  }
}

TEST_CASE("output ranges", "[denoise]") {
  torch::manual_seed(2);
  DenoiserNet net(small());
  net->eval();
  torch::NoGradGuard ng;
  for (const auto& x : {torch::zeros({1, 1, 64, 24}), torch::randn({1, 1, 64, 24})}) {
    const auto out = net->forward(x);
    CHECK(out.y.min().item<float>() >= 0.0f);
    CHECK(out.y_fg.min().item<float>() >= 0.0f);
    CHECK(out.y_bg.min().item<float>() >= 0.0f);
    CHECK(out.m.min().item<float>() > 0.0f);
    CHECK(out.m.max().item<float>() < 1.0f);
    const auto hard = (out.m >= 0.5).to(torch::kFloat);
    CHECK(torch::logical_or(hard == 0, hard == 1).all().item<bool>());
  }
}

TEST_CASE("region decoders with equal weights agree", "[denoise]") {
  torch::manual_seed(3);
  DenoiserNet net(small());
  net->eval();
  torch::NoGradGuard ng;
  const auto src = net->fg->named_parameters();
  auto dst = net->bg->named_parameters();
  for (const auto& p : src) dst[p.key()].copy_(p.value());
  const auto sb = net->fg->named_buffers();
  auto db = net->bg->named_buffers();
  for (const auto& b : sb) db[b.key()].copy_(b.value());

  const auto j = net->encoder->forward(torch::rand({1, 1, 64, 24}));
  const auto a = net->fg->forward(j, 64, 24);
  const auto b = net->bg->forward(j, 64, 24);
  CHECK(torch::equal(a.y_area, b.y_area));
  CHECK(shape(a.d2) == std::vector<int64_t>{1, 8, 64, 24});
}

TEST_CASE("both losses reach both decoders", "[denoise][grad]") {
  torch::manual_seed(4);
  DenoiserNet net(small());
  net->train();
  const auto x = torch::rand({2, 1, 32, 16});
  for (int which = 0; which < 2; ++which) {
    net->zero_grad();
    const auto out = net->forward(x);
    (which == 0 ? out.y.sum() : out.m.sum()).backward();
    for (auto* dec : {&net->fg, &net->bg}) {
      double g = 0.0;
      for (const auto& p : (*dec)->parameters())
        if (p.grad().defined()) g += p.grad().abs().sum().item<double>();
      CHECK(g > 0.0);
    }
  }
}

TEST_CASE("fusion checks shapes", "[denoise]") {
  Fusion f(8);
  CHECK_THROWS_AS(f->forward(torch::rand({1, 8, 4, 4}), torch::rand({1, 8, 4, 5})), DataError);
}

TEST_CASE("denoiser fingerprint", "[denoise]") {
  const auto dc = small(16);
  const auto back = DenoiserConfig::from_fingerprint(dc.fingerprint());
  CHECK(back.base_channels == 16);
  CHECK(back.fingerprint() == dc.fingerprint());
  CHECK_THROWS_AS(DenoiserConfig::from_fingerprint("recon/1 mode=patch"), DataError);
}
