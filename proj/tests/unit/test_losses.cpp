// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <functional>

#include <torch/torch.h>

#include "swe/error.hpp"
#include "swe/nn/losses.hpp"

using Catch::Approx;
using namespace swe;
using namespace swe::nn;
using namespace swe::nn::loss;

namespace {

torch::Tensor t2(std::initializer_list<std::initializer_list<double>> rows) {
  std::vector<double> flat;
  int64_t r = 0, c = 0;
  for (const auto& row : rows) {
    c = static_cast<int64_t>(row.size());
    flat.insert(flat.end(), row.begin(), row.end());
    ++r;
  }
  return torch::tensor(flat, torch::kDouble).reshape({r, c});
}

double val(const torch::Tensor& t) { return t.item<double>(); }

// Largest relative error between autograd and central differences.
double gradient_error(const std::function<torch::Tensor(const torch::Tensor&)>& f, torch::Tensor x) {
  x = x.clone().set_requires_grad(true);
  f(x).backward();
  const auto analytic = x.grad().clone();
  const double h = 1e-6;
  double worst = 0.0;
  auto flat = x.detach().view({-1});
  for (int64_t i = 0; i < flat.numel(); ++i) {
    const double keep = flat[i].item<double>();
    flat[i] = keep + h;
    const double up = val(f(x.detach()));
    flat[i] = keep - h;
    const double down = val(f(x.detach()));
    flat[i] = keep;
    const double numeric = (up - down) / (2 * h);
    const double a = analytic.view({-1})[i].item<double>();
    worst = std::max(worst, std::abs(a - numeric) / std::max(1e-6, std::max(std::abs(a), std::abs(numeric))));
  }
  return worst;
}

}  // namespace

TEST_CASE("reconstruction mae", "[loss]") {
  const auto y = t2({{1, 2}, {3, 4}});
  CHECK(val(recon_mae(y, y)) == 0.0);
  CHECK(val(recon_mae(y + 0.5, y)) == Approx(0.5));

  auto p = (y + t2({{0.3, -0.2}, {0.1, -0.4}})).set_requires_grad(true);
  recon_mae(p, y).backward();
  CHECK(torch::allclose(p.grad(), t2({{0.25, -0.25}, {0.25, -0.25}})));
  CHECK_THROWS_AS(recon_mae(y, t2({{1, 2, 3}})), DataError);
}

TEST_CASE("denoise loss", "[loss]") {
  const auto m = t2({{1, 0}});
  const auto y = t2({{40, 20}});
  auto d = denoise_loss(t2({{38, 0}}), t2({{0, 22}}), y, m, 1.0, 1.0);
  CHECK(val(d.fg1) == Approx(2.0).margin(1e-6));
  CHECK(val(d.fg2) == Approx(0.0).margin(1e-6));
  CHECK(val(d.bg1) == Approx(2.0).margin(1e-6));
  CHECK(val(d.bg2) == Approx(0.0).margin(1e-6));
  CHECK(val(d.l_fg) == Approx(1.0).margin(1e-6));
  CHECK(val(d.l_bg) == Approx(1.0).margin(1e-6));

  d = denoise_loss(y * m, y * (1 - m), y, m, 3.0, 1.0);
  CHECK(val(d.total) == 0.0);

  const auto leak = denoise_loss(t2({{40, 7}}), y * (1 - m), y, m, 3.0, 1.0);
  CHECK(val(leak.fg2) == Approx(7.0));
  CHECK(val(leak.total) == Approx(3.0 * 7.0 / 2.0));

  CHECK_THROWS_AS(denoise_loss(y, y, y, t2({{0.5, 0}}), 1.0, 1.0), DataError);
}

TEST_CASE("fusion loss", "[loss]") {
  const auto g = t2({{1, 2}, {3, 4}});
  auto f = fusion_loss(g, g, 2.0, 50.0);
  CHECK(val(f.mae) == 0.0);
  CHECK(val(f.ncc_term) <= 1e-6);

  f = fusion_loss(2 * g, g, 2.0, 50.0);
  CHECK(val(f.s_ncc) == Approx(1.0).margin(1e-6));
  CHECK(val(f.ncc_term) == Approx(0.0).margin(1e-6));
  CHECK(val(f.total) == Approx(2.0 * val(f.mae)).margin(1e-6));

  f = fusion_loss(t2({{1, 0}, {0, 0}}), t2({{0, 0}, {0, 5}}), 1.0, 50.0);
  CHECK(val(f.s_ncc) == 0.0);
  CHECK(val(f.ncc_term) == 1.0);
}

TEST_CASE("total variation", "[loss]") {
  CHECK(val(tv_loss(torch::full({3, 4}, 2.5, torch::kDouble)).total) == 0.0);
  const auto t = tv_loss(t2({{0, 1}, {0, 1}}));
  CHECK(val(t.axial) == 0.0);
  CHECK(val(t.lateral) == Approx(2.0).margin(1e-6));
  CHECK(val(t.total) == Approx(2.0).margin(1e-6));

  auto spike = [](double h) {
    auto y = torch::zeros({5, 5}, torch::kDouble);
    y[2][2] = h;
    return val(tv_loss(y).total);
  };
  CHECK(spike(2.0) == Approx(4.0 * spike(1.0)));
  CHECK(spike(10.0) == Approx(100.0 * spike(1.0)));

  CHECK_THROWS_AS(tv_loss(torch::zeros({1, 4})), DataError);
}

TEST_CASE("iou loss", "[loss]") {
  const auto a = t2({{1, 1, 0}});
  CHECK(val(iou_loss(a, a)) <= 1e-6);
  CHECK(val(iou_loss(t2({{1, 0, 0}}), t2({{0, 0, 1}}))) == Approx(1.0));
  CHECK(val(iou_loss(a, t2({{0, 1, 1}}))) == Approx(2.0 / 3.0).margin(1e-6));
}

TEST_CASE("loss weights", "[loss]") {
  const auto w = LossWeights::from_ratio(3.0);
  CHECK(w.alpha1 == 3.0);
  CHECK(w.alpha2 == 1.0);
  CHECK(w.beta1 == 2.0);
  CHECK(w.beta2 == 50.0);
  CHECK(w.gamma == 10.0);
  CHECK(w.mu == 1.0);
  CHECK_THROWS_AS(LossWeights::from_ratio(3.0, 1.5), ConfigError);

  LossWeights bad = w;
  bad.beta1 = 5.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("compound loss of perfect outputs", "[loss]") {
  // Constant truth keeps the TV term at zero, so only epsilon terms remain.
  const auto y = torch::full({1, 1, 4, 6}, 0.3, torch::kDouble);
  auto m = torch::zeros({1, 1, 4, 6}, torch::kDouble);
  m.narrow(2, 1, 2).narrow(3, 2, 2).fill_(1.0);
  DenoiserOutputs out{y, m.clamp(1e-6, 1 - 1e-6), y * m, y * (1 - m)};
  const auto t = compound_loss(out, y, m, LossWeights::from_ratio(5.0));
  CHECK(val(t.total) <= 1e-5);
  const auto b = t.breakdown();
  for (const char* key : {"total", "denoise", "l_fg", "l_bg", "fusion", "fusion_mae", "fusion_ncc", "tv", "iou"})
    CHECK(b.count(key) == 1);
}

TEST_CASE("loss gradients match central differences", "[loss][grad]") {
  torch::manual_seed(11);
  const auto opts = torch::TensorOptions().dtype(torch::kDouble);
  const auto y_gt = torch::rand({4, 6}, opts) + 0.1;
  const auto m_gt = (torch::rand({4, 6}, opts) > 0.5).to(torch::kDouble);
  // Offsets keep every L1 argument away from zero.
  const auto x = y_gt + 0.05 + 0.2 * torch::rand({4, 6}, opts);

  CHECK(gradient_error([&](const torch::Tensor& p) { return recon_mae(p, y_gt); }, x) < 1e-5);
  CHECK(gradient_error([&](const torch::Tensor& p) { return denoise_loss(p, y_gt * (1 - m_gt) + 0.3, y_gt, m_gt, 2.0, 1.0).total; }, x) < 1e-5);
  CHECK(gradient_error([&](const torch::Tensor& p) { return denoise_loss(y_gt + 0.3, p, y_gt, m_gt, 2.0, 1.0).total; }, x) < 1e-5);
  CHECK(gradient_error([&](const torch::Tensor& p) { return fusion_loss(p, y_gt, 1.5, 50.0).total; }, x) < 1e-5);
  CHECK(gradient_error([&](const torch::Tensor& p) { return tv_loss(p).total; }, x) < 1e-5);
  CHECK(gradient_error([&](const torch::Tensor& p) { return iou_loss(torch::sigmoid(p), m_gt); }, x) < 1e-5);
}
