// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <torch/torch.h>

#include "swe/error.hpp"
#include "swe/nn/recon.hpp"

using namespace swe;
using namespace swe::nn;

namespace {

std::vector<int64_t> shape(const torch::Tensor& t) { return t.sizes().vec(); }

ReconConfig patch_config(int64_t c = 16) {
  ReconConfig rc;
  rc.mode = ReconMode::kPatch;
  rc.t = 70;
  rc.a = 63;
  rc.l = 10;
  rc.base_channels = c;
  return rc;
}

}  // namespace

TEST_CASE("temporal window plan", "[recon]") {
  auto p = plan_windows(35, 6);
  CHECK(p.seg_len == 10);
  std::vector<int64_t> starts;
  for (auto [s, e] : p.segments) {
    starts.push_back(s);
    CHECK(e - s == 10);
  }
  CHECK(starts == std::vector<int64_t>{0, 5, 10, 15, 20, 25});

  p = plan_windows(70, 6);
  CHECK(p.seg_len == 20);
  starts.clear();
  for (auto [s, e] : p.segments) starts.push_back(s);
  CHECK(starts == std::vector<int64_t>{0, 10, 20, 30, 40, 50});

  p = plan_windows(6, 6);
  CHECK(p.seg_len == 2);
  REQUIRE(p.segments.size() == 6);
  CHECK(p.segments.front().first == 0);
  CHECK(p.segments.back().second == 6);

  CHECK_THROWS_AS(plan_windows(5, 6), ConfigError);
}

TEST_CASE("patch mode feature shapes", "[recon][shape]") {
  torch::manual_seed(0);
  ReconNet net(patch_config());
  net->eval();
  torch::NoGradGuard ng;
  const auto tr = net->trace(torch::rand({1, 1, 70, 63, 10}));
  CHECK(shape(tr.enc.i0) == std::vector<int64_t>{1, 16, 35, 21, 5});
  CHECK(shape(tr.enc.i1) == std::vector<int64_t>{1, 32, 17, 7, 3});
  CHECK(shape(tr.enc.i2) == std::vector<int64_t>{1, 64, 17, 7, 2});
  CHECK(shape(tr.p0) == std::vector<int64_t>{1, 16, 21, 5});
  CHECK(shape(tr.p1) == std::vector<int64_t>{1, 32, 7, 3});
  CHECK(shape(tr.p2) == std::vector<int64_t>{1, 64, 7, 2});
  CHECK(shape(tr.out) == std::vector<int64_t>{1, 1, 21, 4});
  CHECK(tr.out.min().item<float>() >= 0.0f);
  CHECK(net->config().out_a() == 21);
  CHECK(net->config().out_l() == 4);
}

TEST_CASE("full mode shapes", "[recon][shape]") {
  torch::manual_seed(0);
  ReconConfig rc;
  rc.mode = ReconMode::kFull;
  rc.t = 70;
  rc.a = 168;
  rc.l = 16;
  ReconNet net(rc);
  net->eval();
  torch::NoGradGuard ng;
  const auto tr = net->trace(torch::rand({1, 1, 70, 168, 16}));
  CHECK(shape(tr.enc.i2) == std::vector<int64_t>{1, 64, 17, 21, 2});
  CHECK(shape(tr.out) == std::vector<int64_t>{1, 1, 168, 16});
}

TEST_CASE("input shape is checked", "[recon]") {
  ReconNet net(patch_config(4));
  net->eval();
  torch::NoGradGuard ng;
  CHECK_THROWS_AS(net->forward(torch::rand({1, 1, 70, 62, 10})), DataError);
}

TEST_CASE("inference is finite and deterministic", "[recon]") {
  torch::manual_seed(3);
  ReconNet net(patch_config(4));
  net->eval();
  torch::NoGradGuard ng;
  const auto zero = net->forward(torch::zeros({2, 1, 70, 63, 10}));
  CHECK(torch::isfinite(zero).all().item<bool>());
  const auto x = torch::rand({2, 1, 70, 63, 10});
  CHECK(torch::equal(net->forward(x), net->forward(x)));
}

TEST_CASE("temporal attention", "[recon][attention]") {
  torch::manual_seed(1);
  TemporalAttention tam(8);
  const auto h = torch::randn({3, 8, 9, 5, 4});
  const auto r = tam->attend(h);
  CHECK(shape(r.out) == std::vector<int64_t>{3, 8, 5, 4});
  CHECK((r.alpha.sum(1) - 1.0).abs().max().item<float>() <= 1e-6f);

  const auto single = torch::randn({2, 8, 1, 5, 4});
  const auto s = tam->attend(single);
  CHECK(torch::allclose(s.alpha, torch::ones({2, 1})));
  CHECK(torch::allclose(s.out, single.select(2, 0)));

  const auto frame = torch::randn({2, 8, 1, 5, 4});
  const auto constant = tam->attend(frame.expand({2, 8, 7, 5, 4}).contiguous());
  CHECK(torch::allclose(constant.out, frame.select(2, 0), 1e-5, 1e-6));
}

TEST_CASE("fft attention", "[recon][attention]") {
  torch::manual_seed(2);
  const auto y = torch::randn({2, 16, 21, 5});
  const auto shifted = torch::roll(y, {3, 2}, {2, 3});
  const auto m0 = FftAttentionImpl::magnitude(y);
  const auto m1 = FftAttentionImpl::magnitude(shifted);
  CHECK(((m0 - m1).abs().max() / m0.abs().max()).item<float>() <= 1e-4f);

  for (auto s : {std::vector<int64_t>{1, 16, 21, 5}, std::vector<int64_t>{1, 32, 7, 3},
                 std::vector<int64_t>{1, 64, 7, 2}}) {
    FftAttention fa(s[1], 4);
    fa->eval();
    CHECK(fa->forward(torch::randn(s)).sizes() == torch::IntArrayRef(s));
  }

  SECTION("closed gate leaves the input unchanged") {
    FftAttention fa(16, 4);
    fa->eval();
    torch::NoGradGuard ng;
    fa->se->fc2->bias.fill_(-1e4);
    const auto x = torch::randn({1, 16, 21, 5});
    CHECK(torch::allclose(fa->forward(x), x));
  }
}

TEST_CASE("nested block", "[recon][attention]") {
  torch::manual_seed(4);
  SECTION("level shapes") {
    NestedLstmBlock b0(16, 6, 3, 4);
    b0->eval();
    torch::NoGradGuard ng;
    CHECK(shape(b0->forward(torch::randn({1, 16, 35, 21, 5}))) == std::vector<int64_t>{1, 16, 21, 5});
    NestedLstmBlock b2(64, 6, 3, 4);
    b2->eval();
    CHECK(shape(b2->forward(torch::randn({1, 64, 17, 7, 2}))) == std::vector<int64_t>{1, 64, 7, 2});
  }
  SECTION("time-constant input repeats across paths") {
    NestedLstmBlock b(4, 6, 3, 4);
    b->eval();
    torch::NoGradGuard ng;
    const auto frame = torch::randn({1, 4, 1, 6, 3});
    const auto tr = b->trace(frame.expand({1, 4, 12, 6, 3}).contiguous());
    const auto groups = tr.paths.split(4, 1);
    REQUIRE(groups.size() == 6);
    for (const auto& g : groups) CHECK(torch::equal(g, groups.front()));
    CHECK(shape(tr.alpha) == std::vector<int64_t>{1, 6, 4});
  }
}

TEST_CASE("input gradient is finite and nonzero", "[recon][grad]") {
  torch::manual_seed(5);
  ReconConfig rc = patch_config(4);
  rc.t = 32;
  rc.a = 27;
  ReconNet net(rc);
  net->train();
  auto x = torch::rand({2, 1, 32, 27, 10}).requires_grad_(true);
  net->forward(x).sum().backward();
  const auto g = x.grad();
  CHECK(torch::isfinite(g).all().item<bool>());
  CHECK(g.abs().sum().item<float>() > 0.0f);
}

TEST_CASE("config fingerprint", "[recon]") {
  const auto rc = patch_config(8);
  const auto back = ReconConfig::from_fingerprint(rc.fingerprint());
  CHECK(back.fingerprint() == rc.fingerprint());
  CHECK(back.base_channels == 8);
  CHECK_THROWS_AS(ReconConfig::from_fingerprint("denoiser/1 c=8"), DataError);

  ReconConfig bad = rc;
  bad.convlstm_depth = 2;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK(recon_mode_from_string(to_string(ReconMode::kFull)) == ReconMode::kFull);
}
