// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion. Arguments restrict the
// run to the listed criterion numbers, e.g. `acceptance 1 2 9`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "swe/dataset.hpp"
#include "swe/error.hpp"
#include "swe/metrics.hpp"
#include "swe/nn/convert.hpp"
#include "swe/nn/denoise.hpp"
#include "swe/nn/losses.hpp"
#include "swe/nn/recon.hpp"
#include "swe/patchwork.hpp"
#include "swe/phantom.hpp"
#include "swe/pipeline/report.hpp"
#include "swe/pipeline/train.hpp"
#include "test_support.hpp"

using namespace swe;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[x] " << what << "; ";
    }
  }
  void note(const std::string& what) { detail << what << "; "; }
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

std::vector<int64_t> shape(const torch::Tensor& t) { return t.sizes().vec(); }

std::string shape_str(const std::vector<int64_t>& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + ")";
}

double val(const torch::Tensor& t) { return t.item<double>(); }

// ---------------------------------------------------------------------------

void shapes(Outcome& o) {
  torch::manual_seed(0);
  nn::ReconConfig rc;
  rc.mode = nn::ReconMode::kPatch;
  rc.t = 70;
  rc.a = 63;
  rc.l = 10;
  nn::ReconNet net(rc);
  net->eval();
  torch::NoGradGuard ng;
  const auto tr = net->trace(torch::rand({1, 1, 70, 63, 10}));
  const std::vector<std::pair<torch::Tensor, std::vector<int64_t>>> expect = {
      {tr.enc.i0, {1, 16, 35, 21, 5}}, {tr.enc.i1, {1, 32, 17, 7, 3}}, {tr.enc.i2, {1, 64, 17, 7, 2}},
      {tr.p0, {1, 16, 21, 5}},         {tr.p1, {1, 32, 7, 3}},         {tr.p2, {1, 64, 7, 2}},
      {tr.out, {1, 1, 21, 4}}};
  for (const auto& [t, s] : expect) o.check(shape(t) == s, "patch " + shape_str(shape(t)) + " != " + shape_str(s));

  rc.mode = nn::ReconMode::kFull;
  rc.a = 168;
  rc.l = 16;
  nn::ReconNet full(rc);
  full->eval();
  const auto out = full->forward(torch::rand({1, 1, 70, 168, 16}));
  o.check(shape(out) == std::vector<int64_t>{1, 1, 168, 16}, "full output " + shape_str(shape(out)));
  o.note("patch out " + shape_str(shape(tr.out)) + ", full out " + shape_str(shape(out)));
}

// ---------------------------------------------------------------------------

torch::Tensor dbl(std::initializer_list<std::initializer_list<double>> rows) {
  std::vector<double> flat;
  int64_t r = 0, c = 0;
  for (const auto& row : rows) {
    c = static_cast<int64_t>(row.size());
    flat.insert(flat.end(), row.begin(), row.end());
    ++r;
  }
  return torch::tensor(flat, torch::kDouble).reshape({r, c});
}

void loss_oracles(Outcome& o) {
  namespace L = nn::loss;
  const auto m = dbl({{1, 0}});
  const auto y = dbl({{40, 20}});
  const auto d = L::denoise_loss(dbl({{38, 0}}), dbl({{0, 22}}), y, m, 1.0, 1.0);
  o.check(std::abs(val(d.l_fg) - 1.0) <= 1e-6, "L_FG " + fmt(val(d.l_fg), 10));
  o.check(std::abs(val(d.l_bg) - 1.0) <= 1e-6, "L_BG " + fmt(val(d.l_bg), 10));

  const auto tv = val(L::tv_loss(dbl({{0, 1}, {0, 1}})).total);
  o.check(std::abs(tv - 2.0) <= 1e-6, "TV " + fmt(tv, 10));

  const auto same = val(L::iou_loss(dbl({{1, 1, 0}}), dbl({{1, 1, 0}})));
  const auto disjoint = val(L::iou_loss(dbl({{1, 0, 0}}), dbl({{0, 0, 1}})));
  o.check(same <= 1e-6, "IoU identical " + fmt(same));
  o.check(std::abs(disjoint - 1.0) <= 1e-6, "IoU disjoint " + fmt(disjoint, 10));

  const auto g = dbl({{1, 2}, {3, 4}});
  const auto n1 = val(L::fusion_loss(g, g, 2.0, 50.0).ncc_term);
  const auto n2 = val(L::fusion_loss(2 * g, g, 2.0, 50.0).ncc_term);
  o.check(std::abs(n1) <= 1e-6, "NCC y=y_gt " + fmt(n1));
  o.check(std::abs(n2) <= 1e-6, "NCC y=2y_gt " + fmt(n2));
  o.note("L_FG " + fmt(val(d.l_fg)) + ", TV " + fmt(tv) + ", IoU " + fmt(same) + "/" + fmt(disjoint) + ", NCC " +
         fmt(n1) + "/" + fmt(n2));
}

// ---------------------------------------------------------------------------

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-10}); }

// Worst relative error over every input coordinate.
double input_gradient_error(const std::function<torch::Tensor(const torch::Tensor&)>& f, torch::Tensor x) {
  x = x.clone().set_requires_grad(true);
  f(x).backward();
  const auto analytic = x.grad().clone().view({-1});
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
    worst = std::max(worst, rel_err(analytic[i].item<double>(), (up - down) / (2 * h)));
  }
  return worst;
}

// Worst relative error over `n` random parameter coordinates.
double parameter_gradient_error(torch::nn::Module& net, const std::function<torch::Tensor()>& f, int n,
                                std::uint64_t seed) {
  auto params = net.parameters();
  net.zero_grad();
  f().backward();
  std::vector<int64_t> sizes;
  for (const auto& p : params) sizes.push_back(p.numel());
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick(sizes.begin(), sizes.end());
  const double h = 1e-6;
  double worst = 0.0;
  for (int k = 0; k < n; ++k) {
    const auto pi = pick(rng);
    const auto idx = static_cast<int64_t>(std::uniform_int_distribution<int64_t>(0, sizes[pi] - 1)(rng));
    auto flat = params[pi].detach().view({-1});
    const double analytic = params[pi].grad().view({-1})[idx].item<double>();
    torch::NoGradGuard ng;
    const double keep = flat[idx].item<double>();
    flat[idx] = keep + h;
    const double up = val(f());
    flat[idx] = keep - h;
    const double down = val(f());
    flat[idx] = keep;
    worst = std::max(worst, rel_err(analytic, (up - down) / (2 * h)));
  }
  return worst;
}

void gradients(Outcome& o) {
  namespace L = nn::loss;
  torch::manual_seed(11);
  const auto opts = torch::TensorOptions().dtype(torch::kDouble);
  const auto y_gt = torch::rand({4, 6}, opts) + 0.1;
  const auto m_gt = (torch::rand({4, 6}, opts) > 0.5).to(torch::kDouble);
  // Offsets keep every L1 argument away from zero.
  const auto x = y_gt + 0.05 + 0.2 * torch::rand({4, 6}, opts);
  const std::vector<std::pair<std::string, std::function<torch::Tensor(const torch::Tensor&)>>> terms = {
      {"recon_mae", [&](const torch::Tensor& p) { return L::recon_mae(p, y_gt); }},
      {"denoise_fg", [&](const torch::Tensor& p) { return L::denoise_loss(p, y_gt * (1 - m_gt) + 0.3, y_gt, m_gt, 2.0, 1.0).total; }},
      {"denoise_bg", [&](const torch::Tensor& p) { return L::denoise_loss(y_gt + 0.3, p, y_gt, m_gt, 2.0, 1.0).total; }},
      {"fusion", [&](const torch::Tensor& p) { return L::fusion_loss(p, y_gt, 1.5, 50.0).total; }},
      {"tv", [&](const torch::Tensor& p) { return L::tv_loss(p).total; }},
      {"iou", [&](const torch::Tensor& p) { return L::iou_loss(torch::sigmoid(p), m_gt); }},
  };
  double worst_loss = 0.0;
  for (const auto& [name, f] : terms) {
    const double e = input_gradient_error(f, x);
    worst_loss = std::max(worst_loss, e);
    o.check(e < 1e-5, name + " rel err " + fmt(e));
  }

  torch::manual_seed(5);
  nn::ReconConfig rc;
  rc.mode = nn::ReconMode::kPatch;
  rc.t = 32;
  rc.a = 27;
  rc.l = 10;
  rc.base_channels = 4;
  nn::ReconNet recon(rc);
  recon->to(torch::kDouble);
  recon->train();
  const auto rx = torch::rand({2, 1, 32, 27, 10}, opts);
  const auto rw = torch::randn({2, 1, rc.out_a(), rc.out_l()}, opts);
  const double e_recon = parameter_gradient_error(*recon, [&] { return (recon->forward(rx) * rw).sum(); }, 10, 21);
  o.check(e_recon < 1e-3, "recon rel err " + fmt(e_recon));

  nn::DenoiserConfig dc;
  dc.base_channels = 8;
  nn::DenoiserNet den(dc);
  den->to(torch::kDouble);
  den->train();
  const auto dx = torch::rand({2, 1, 64, 24}, opts);
  std::vector<torch::Tensor> dw;
  for (int i = 0; i < 4; ++i) dw.push_back(torch::randn({2, 1, 64, 24}, opts));
  const double e_den = parameter_gradient_error(
      *den,
      [&] {
        const auto out = den->forward(dx);
        return (out.y * dw[0]).sum() + (out.m * dw[1]).sum() + (out.y_fg * dw[2]).sum() + (out.y_bg * dw[3]).sum();
      },
      10, 22);
  o.check(e_den < 1e-3, "denoiser rel err " + fmt(e_den));
  o.note("loss terms worst " + fmt(worst_loss) + ", recon C=4 " + fmt(e_recon) + ", denoiser C=8 " + fmt(e_den));
}

// ---------------------------------------------------------------------------

void attention(Outcome& o) {
  torch::manual_seed(1);
  nn::TemporalAttention tam(8);
  const auto r = tam->attend(torch::randn({3, 8, 9, 5, 4}));
  const double sum_err = val((r.alpha.sum(1) - 1.0).abs().max().to(torch::kDouble));
  o.check(sum_err <= 1e-6, "TAM weight sum error " + fmt(sum_err));

  const auto y = torch::randn({2, 16, 21, 5});
  const auto m0 = nn::FftAttentionImpl::magnitude(y);
  const auto m1 = nn::FftAttentionImpl::magnitude(torch::roll(y, {3, 2}, {2, 3}));
  const double shift_err = val(((m0 - m1).abs().max() / m0.abs().max()).to(torch::kDouble));
  o.check(shift_err <= 1e-4, "FFT magnitude shift error " + fmt(shift_err));
  o.note("TAM sum err " + fmt(sum_err) + ", FFT shift rel err " + fmt(shift_err));
}

// ---------------------------------------------------------------------------

double constant_patch_error(std::size_t rows, std::size_t cols, std::size_t ap, std::size_t lp, std::size_t sa,
                            std::size_t sl, double alpha) {
  const float c = 3.25f;
  const auto grid = make_covering_grid(rows, cols, ap, lp, sa, sl);
  std::vector<PatchPrediction> preds;
  for (const auto& an : grid.anchors) preds.push_back({grid.footprint_origin(an), Map2(grid.out_a, grid.out_l, c)});
  const auto out = overlap_add(preds, rows, cols, tukey2d(grid.out_a, grid.out_l, alpha));
  double worst = 0.0;
  for (float v : out.values()) worst = std::max(worst, std::abs(static_cast<double>(v) - c));
  return worst;
}

void merging(Outcome& o) {
  struct Combo {
    std::size_t rows, cols, ap, lp, sa, sl;
    double alpha;
  };
  const std::vector<Combo> combos = {
      {168, 16, 63, 10, 21, 4, 0.5}, {168, 16, 63, 10, 10, 2, 0.5}, {168, 16, 63, 10, 7, 1, 0.25},
      {168, 16, 63, 10, 21, 4, 0.0}, {168, 16, 63, 10, 5, 2, 1.0},  {64, 16, 27, 10, 4, 2, 0.5},
      {64, 16, 27, 10, 3, 1, 0.75}};
  double worst = 0.0;
  for (const auto& c : combos) {
    const double e = constant_patch_error(c.rows, c.cols, c.ap, c.lp, c.sa, c.sl, c.alpha);
    worst = std::max(worst, e);
    o.check(e <= 1e-6, "patches " + std::to_string(c.ap) + "x" + std::to_string(c.lp) + " stride " +
                           std::to_string(c.sa) + "/" + std::to_string(c.sl) + " alpha " + fmt(c.alpha) +
                           " err " + fmt(e));
  }
  for (const auto& preset : {paper_preset(), desk_preset()}) {
    const auto& layout = preset.layout;
    for (double alpha : {0.0, 0.5, 1.0}) {
      const std::vector<Map2> maps(layout.r_regions, Map2(layout.region_axial_px, layout.region_lateral_px, 7.0f));
      const auto full = merge_regions(maps, layout, tukey2d(layout.region_axial_px, layout.region_lateral_px, alpha));
      double e = 0.0;
      for (float v : full.values()) e = std::max(e, std::abs(static_cast<double>(v) - 7.0));
      worst = std::max(worst, e);
      o.check(e <= 1e-6, preset.name + " regions alpha " + fmt(alpha) + " err " + fmt(e));
    }
  }
  o.note(std::to_string(combos.size()) + " patch combos + 6 region merges, worst err " + fmt(worst));
}

// ---------------------------------------------------------------------------

double snr_of(const MotionVolume& clean, const MotionVolume& noisy) {
  double ps = 0.0, pn = 0.0;
  for (std::size_t i = 0; i < clean.data.size(); ++i) {
    const double s = clean.data.values()[i];
    const double n = noisy.data.values()[i] - s;
    ps += s * s;
    pn += n * n;
  }
  return 10.0 * std::log10(ps / pn);
}

void simulator(Outcome& o) {
  const Preset p = paper_preset();
  for (double e : {25.0, 48.0}) {
    PhantomSpec s = p.base;
    s.e_inclusion_kpa = e;
    s.e_background_kpa = e;
    const auto vol = simulate_region(make_phantom(s), p.layout, 0, p.arf);
    // Push 4 mm left of column 0: columns 2 and 10 sit 6.5 and 14.5 mm away.
    const auto est = metrics::ttp_speed_estimate(vol, 84, 2, 10, 1.0, p.arf.prf_hz);
    const double want = shear_speed_m_s(e, 1000.0);
    const double err = std::abs(est.speed_m_s - want) / want;
    o.check(err < 0.05, fmt(e) + " kPa speed " + fmt(est.speed_m_s) + " vs " + fmt(want));
    o.note(fmt(e) + " kPa: " + fmt(est.speed_m_s) + " m/s vs " + fmt(want) + " (" + fmt(100 * err, 2) + "%)");
  }
  const auto vol = simulate_region(make_phantom(p.base), p.layout, 0, p.arf);
  for (double snr : {11.0, 3.0}) {
    const double got = snr_of(vol, add_noise(vol, snr, 42));
    o.check(std::abs(got - snr) <= 0.3, "SNR " + fmt(snr) + " dB measured " + fmt(got));
    o.note("SNR " + fmt(snr) + " dB -> " + fmt(got));
  }
}

// ---------------------------------------------------------------------------

Mask2 square(std::size_t rows, std::size_t cols, std::size_t a0, std::size_t l0, std::size_t side) {
  Mask2 m(rows, cols, 0);
  for (std::size_t a = a0; a < a0 + side; ++a)
    for (std::size_t l = l0; l < l0 + side; ++l) m(a, l) = 1;
  return m;
}

void metric_sanity(Outcome& o) {
  Map2 t(1, 2), e(1, 2);
  t(0, 0) = 1.0f;
  t(0, 1) = 0.5f;
  e(0, 0) = 0.5f;
  e(0, 1) = 1.0f;
  const double psnr = metrics::psnr(t, e);
  o.check(std::abs(psnr - 6.0206) <= 1e-4, "PSNR " + fmt(psnr, 8));

  Map2 y(1, 6);
  Mask2 m(1, 6, 0);
  const float vals[] = {18, 22, 18, 22, 40, 40};
  std::copy(std::begin(vals), std::end(vals), y.values().begin());
  m(0, 4) = m(0, 5) = 1;
  const double cnr = metrics::cnr(y, m);
  o.check(std::abs(cnr - 20.0) <= 1e-4, "CNR " + fmt(cnr, 8));

  const auto a = square(7, 7, 2, 2, 3);
  const double hd = metrics::hd_assd(square(7, 7, 2, 3, 3), a).hd;
  o.check(std::abs(hd - 1.0) <= 1e-4, "HD " + fmt(hd, 8));

  std::mt19937 rng(2024);
  int bad_order = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto random_mask = [&] {
      std::bernoulli_distribution coin(std::uniform_real_distribution<double>(0.05, 0.6)(rng));
      Mask2 r(9, 7, 0);
      for (auto& v : r.values()) v = coin(rng) ? 1 : 0;
      r(rng() % 9, rng() % 7) = 1;
      return r;
    };
    const auto p = random_mask();
    const auto g = random_mask();
    const auto ov = metrics::iou_f1(p, g);
    const auto d = metrics::hd_assd(p, g);
    if (ov.iou > ov.f1 + 1e-12 || d.hd < d.assd - 1e-12) ++bad_order;
  }
  o.check(bad_order == 0, std::to_string(bad_order) + " random pairs break IoU<=F1 or HD>=ASSD");
  o.note("PSNR " + fmt(psnr, 6) + ", CNR " + fmt(cnr, 6) + ", HD " + fmt(hd) + ", 1000 random pairs ordered");
}

// ---------------------------------------------------------------------------
// Training criteria share one recipe.

constexpr std::size_t kOverfitSamples = 4;
constexpr std::uint64_t kDataSeed = 7;
constexpr std::uint64_t kTrainSeed = 1;
constexpr int64_t kMaxSteps = 2000;
constexpr int64_t kReconChannels = 8;
constexpr int64_t kDenoiserChannels = 8;
// One optimizer step per denoiser epoch on four samples.
constexpr int kDenoiserPatience = 100;

struct OverfitRun {
  pipeline::ReconTrainResult recon;
  pipeline::DenoiserTrainResult denoiser;
  std::vector<PhantomTruth> truths;
  std::string recon_bytes, denoiser_bytes;
  double recon_fg = 0.0, recon_bg = 0.0;
  std::vector<metrics::RegionMae> recon_mae;
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

OverfitRun overfit(double snr_db, const std::string& tag) {
  GenerateOptions g;
  g.n = kOverfitSamples;
  g.snr_db = snr_db;
  g.seed = kDataSeed;
  g.preset = "desk";
  const auto ds = generate_dataset(g);
  swe::testing::TempDir dir("acceptance-" + tag);

  OverfitRun run;
  pipeline::TrainConfig rc;
  rc.stage = pipeline::Stage::kRecon;
  rc.mode = nn::ReconMode::kPatch;
  rc.ap = 27;
  rc.lp = 10;
  rc.channels = kReconChannels;
  rc.max_steps = kMaxSteps;
  rc.seed = kTrainSeed;
  rc.out = dir / "recon";
  rc.cache_yprime = false;
  run.recon = pipeline::train_recon(rc, ds);
  run.recon_bytes = slurp(run.recon.checkpoint);

  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    run.truths.push_back(make_phantom(ds.samples[i].spec));
    Map2 kpa = run.recon.y_prime[i];  // stored as kPa / 100
    for (auto& v : kpa.values()) v *= 100.0f;
    const auto mae = metrics::region_mae(kpa, run.truths[i].modulus_kpa, run.truths[i].mask);
    run.recon_mae.push_back(mae);
    run.recon_fg += mae.fg / static_cast<double>(ds.samples.size());
    run.recon_bg += mae.bg / static_cast<double>(ds.samples.size());
  }

  pipeline::TrainConfig dc;
  dc.stage = pipeline::Stage::kDenoiser;
  dc.channels = kDenoiserChannels;
  dc.max_steps = kMaxSteps;
  dc.epochs = static_cast<int>(kMaxSteps);
  dc.plateau_patience = kDenoiserPatience;
  dc.seed = kTrainSeed;
  dc.out = dir / "denoiser";
  run.denoiser = pipeline::train_denoiser(dc, ds, run.recon.y_prime);
  run.denoiser_bytes = slurp(run.denoiser.checkpoint);
  return run;
}

double mean_of(const std::vector<pipeline::SampleEvaluation>& ev, const std::string& key) {
  double s = 0.0;
  for (const auto& e : ev) s += e.y.at(key);
  return s / static_cast<double>(ev.size());
}

std::string per_sample(const std::vector<pipeline::SampleEvaluation>& ev, const std::string& key) {
  std::string out;
  for (const auto& e : ev) out += (out.empty() ? "" : ",") + fmt(e.y.at(key), 3);
  return out;
}

const OverfitRun& clean_run() {
  static const OverfitRun run = overfit(std::numeric_limits<double>::infinity(), "clean");
  return run;
}

void describe_recon(Outcome& o, const OverfitRun& r) {
  std::string fg, bg;
  for (const auto& m : r.recon_mae) {
    fg += (fg.empty() ? "" : ",") + fmt(m.fg, 3);
    bg += (bg.empty() ? "" : ",") + fmt(m.bg, 3);
  }
  o.note("recon " + std::to_string(r.recon.report.step_losses.size()) + " steps, Y' MAE FG " + fmt(r.recon_fg) +
         " [" + fg + "] BG " + fmt(r.recon_bg) + " [" + bg + "] kPa");
}

void overfit_clean(Outcome& o) {
  const auto& r = clean_run();
  describe_recon(o, r);
  o.check(r.recon_fg < 2.0, "recon FG MAE " + fmt(r.recon_fg) + " kPa");
  o.check(r.recon_bg < 1.0, "recon BG MAE " + fmt(r.recon_bg) + " kPa");
  const auto& ev = r.denoiser.train_evaluation;
  const double iou = mean_of(ev, "IoU");
  const double ssim = mean_of(ev, "SSIM");
  o.note("denoiser " + std::to_string(r.denoiser.report.step_losses.size()) + " steps, IoU " + fmt(iou) + " [" +
         per_sample(ev, "IoU") + "] SSIM " + fmt(ssim) + " [" + per_sample(ev, "SSIM") + "]");
  o.check(iou > 0.85, "IoU " + fmt(iou));
  o.check(ssim >= 0.9, "SSIM " + fmt(ssim));
}

void overfit_noisy(Outcome& o) {
  const auto r = overfit(11.0, "snr11");
  describe_recon(o, r);
  const auto& ev = r.denoiser.train_evaluation;
  const double ssim = mean_of(ev, "SSIM");
  o.note("SSIM " + fmt(ssim) + " [" + per_sample(ev, "SSIM") + "]");
  o.check(ssim >= 0.85, "SSIM " + fmt(ssim));
  for (const auto& e : ev) {
    o.note("sample " + std::to_string(e.index) + " BG std Y " + fmt(e.bg_std_y) + " vs Y' " + fmt(e.bg_std_y_prime));
    o.check(e.bg_std_y < e.bg_std_y_prime, "sample " + std::to_string(e.index) + " BG std not reduced");
  }
}

double curve_gap(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

void reproducibility(Outcome& o) {
  const auto& first = clean_run();
  const auto second = overfit(std::numeric_limits<double>::infinity(), "clean-again");
  const double gr = curve_gap(first.recon.report.step_losses, second.recon.report.step_losses);
  const double gd = curve_gap(first.denoiser.report.step_losses, second.denoiser.report.step_losses);
  o.check(gr <= 1e-6, "recon loss curves differ by " + fmt(gr));
  o.check(gd <= 1e-6, "denoiser loss curves differ by " + fmt(gd));
  o.check(first.recon_bytes == second.recon_bytes, "recon checkpoints differ");
  o.check(first.denoiser_bytes == second.denoiser_bytes, "denoiser checkpoints differ");
  o.check(!first.recon_bytes.empty() && !first.denoiser_bytes.empty(), "empty checkpoint");
  o.note("loss curve gaps " + fmt(gr) + "/" + fmt(gd) + ", checkpoints " + std::to_string(first.recon_bytes.size()) +
         "+" + std::to_string(first.denoiser_bytes.size()) + " bytes");
}

}  // namespace

int main(int argc, char** argv) {
  torch::set_num_threads(1);
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"shape conformance", shapes},
      {"loss oracles", loss_oracles},
      {"gradient checks", gradients},
      {"attention properties", attention},
      {"patch merging", merging},
      {"simulator fidelity", simulator},
      {"overfit smoke training", overfit_clean},
      {"noise-robustness smoke", overfit_noisy},
      {"metric sanity", metric_sanity},
      {"reproducibility", reproducibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(n)) continue;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += o.pass ? 0 : 1;
    std::printf("criterion %2d %s  %s (%.1fs): %s\n", n, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(), secs,
                o.detail.str().c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
