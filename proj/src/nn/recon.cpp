// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#include "swe/nn/recon.hpp"

#include <cmath>
#include <sstream>

#include "swe/error.hpp"

namespace swe::nn {

namespace {

int64_t ceil_div(int64_t a, int64_t b) { return (a + b - 1) / b; }

std::string shape_str(const torch::Tensor& x) {
  std::ostringstream os;
  os << x.sizes();
  return os.str();
}

}  // namespace

std::string to_string(ReconMode m) { return m == ReconMode::kFull ? "full" : "patch"; }

ReconMode recon_mode_from_string(const std::string& s) {
  if (s == "full") return ReconMode::kFull;
  if (s == "patch") return ReconMode::kPatch;
  throw ConfigError("recon mode must be 'full' or 'patch', got '" + s + "'");
}

void ReconConfig::validate() const {
  if (convlstm_depth != 3) throw ConfigError("convlstm_depth must be 3");
  if (base_channels < 1 || se_reduction < 1 || paths < 1)
    throw ConfigError("base_channels, se_reduction and paths must be positive");
  if (t / 4 < paths) throw ConfigError("T/4 must be at least the number of temporal paths");
  if (mode == ReconMode::kFull) {
    if (a < 8 || l < 8) throw ConfigError("full mode needs A >= 8 and L >= 8");
  } else {
    if (a < 9 || l < 4) throw ConfigError("patch mode needs ap >= 9 and lp >= 4");
  }
  if (tukey_alpha < 0.0 || tukey_alpha > 1.0) throw ConfigError("tukey_alpha must lie in [0, 1]");
}

int64_t ReconConfig::out_a() const { return mode == ReconMode::kFull ? a : ceil_div(a, 3); }
int64_t ReconConfig::out_l() const { return mode == ReconMode::kFull ? l : ceil_div(l, 2) - 1; }

std::string ReconConfig::fingerprint() const {
  std::ostringstream os;
  os << "recon/1 mode=" << to_string(mode) << " t=" << t << " a=" << a << " l=" << l
     << " c=" << base_channels << " depth=" << convlstm_depth << " se=" << se_reduction
     << " paths=" << paths;
  return os.str();
}

ReconConfig ReconConfig::from_fingerprint(const std::string& fp) {
  std::istringstream is(fp);
  std::string tag;
  is >> tag;
  if (tag != "recon/1") throw DataError(DataError::Kind::kFingerprint, "not a reconstruction network fingerprint: '" + fp + "'");
  ReconConfig c;
  std::string tok;
  try {
    while (is >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw DataError(DataError::Kind::kFingerprint, "malformed fingerprint '" + fp + "'");
      const auto key = tok.substr(0, eq), val = tok.substr(eq + 1);
      if (key == "mode") c.mode = recon_mode_from_string(val);
      else if (key == "t") c.t = std::stoll(val);
      else if (key == "a") c.a = std::stoll(val);
      else if (key == "l") c.l = std::stoll(val);
      else if (key == "c") c.base_channels = std::stoll(val);
      else if (key == "depth") c.convlstm_depth = std::stoll(val);
      else if (key == "se") c.se_reduction = std::stoll(val);
      else if (key == "paths") c.paths = std::stoll(val);
      else throw DataError(DataError::Kind::kFingerprint, "unknown fingerprint field '" + key + "'");
    }
  } catch (const std::logic_error&) {
    throw DataError(DataError::Kind::kFingerprint, "malformed fingerprint '" + fp + "'");
  }
  if (c.fingerprint() != fp) throw DataError(DataError::Kind::kFingerprint, "malformed fingerprint '" + fp + "'");
  return c;
}

TemporalWindowPlan plan_windows(int64_t t_len, int64_t s) {
  if (s < 1) throw ConfigError("plan_windows: need at least one path");
  if (t_len < s) {
    throw ConfigError("plan_windows: " + std::to_string(t_len) + " frames cannot feed " +
                      std::to_string(s) + " temporal paths");
  }
  TemporalWindowPlan plan;
  plan.s_paths = s;
  plan.t_len = t_len;
  plan.seg_len = std::min(t_len, ceil_div(2 * t_len, s + 1));
  const double spacing = s > 1 ? static_cast<double>(t_len - plan.seg_len) / static_cast<double>(s - 1) : 0.0;
  for (int64_t i = 0; i < s; ++i) {
    int64_t start = std::lround(spacing * static_cast<double>(i));
    if (i == s - 1) start = t_len - plan.seg_len;
    plan.segments.emplace_back(start, start + plan.seg_len);
  }
  return plan;
}

ConvLstmImpl::ConvLstmImpl(int64_t in_ch, int64_t hidden_ch, int64_t depth) : hidden(hidden_ch) {
  for (int64_t k = 0; k < depth; ++k) {
    const int64_t cin = k == 0 ? in_ch : hidden;
    auto x = register_module("wx" + std::to_string(k),
                             torch::nn::Conv2d(torch::nn::Conv2dOptions(cin, 4 * hidden, 3).padding(1)));
    auto h = register_module("wh" + std::to_string(k),
                             torch::nn::Conv2d(torch::nn::Conv2dOptions(hidden, 4 * hidden, 3).padding(1).bias(false)));
    torch::NoGradGuard ng;
    x->bias.zero_();
    x->bias.narrow(0, hidden, hidden).fill_(1.0);  // forget gate
    torch::nn::init::orthogonal_(h->weight);
    wx.push_back(x);
    wh.push_back(h);
  }
}

torch::Tensor ConvLstmImpl::forward(const torch::Tensor& x) {
  const int64_t n = x.size(0), t = x.size(2), a = x.size(3), l = x.size(4);
  auto seq = x;
  for (std::size_t k = 0; k < wx.size(); ++k) {
    const int64_t cin = seq.size(1);
    auto flat = seq.permute({0, 2, 1, 3, 4}).reshape({n * t, cin, a, l});
    auto gx = wx[k]->forward(flat).view({n, t, 4 * hidden, a, l});
    auto h = torch::zeros({n, hidden, a, l}, x.options());
    auto c = torch::zeros_like(h);
    std::vector<torch::Tensor> hs;
    hs.reserve(static_cast<std::size_t>(t));
    for (int64_t s = 0; s < t; ++s) {
      auto g = gx.select(1, s) + wh[k]->forward(h);
      auto gates = g.chunk(4, 1);
      auto i = torch::sigmoid(gates[0]);
      auto f = torch::sigmoid(gates[1]);
      auto o = torch::sigmoid(gates[2]);
      auto u = torch::tanh(gates[3]);
      c = f * c + i * u;
      h = o * torch::tanh(c);
      hs.push_back(h);
    }
    seq = torch::stack(hs, 2);
  }
  return seq;
}

TemporalAttentionImpl::TemporalAttentionImpl(int64_t channels)
    : key(channels, channels), query(channels, channels) {
  register_module("key", key);
  register_module("query", query);
}

TemporalAttentionOutput TemporalAttentionImpl::attend(const torch::Tensor& h) {
  if (h.dim() != 5 || h.size(2) < 1) throw DataError(DataError::Kind::kShape, "temporal attention expects (N, C, t, A, L), got " + shape_str(h));
  const int64_t c = h.size(1);
  auto desc = h.mean({3, 4}).transpose(1, 2);  // (N, t, C)
  auto k = key(desc);
  auto q = query(desc.select(1, desc.size(1) - 1)).unsqueeze(2);  // (N, C, 1)
  auto scores = torch::bmm(k, q).squeeze(2) / std::sqrt(static_cast<double>(c));
  auto alpha = torch::softmax(scores, 1);
  auto out = (h * alpha.view({alpha.size(0), 1, alpha.size(1), 1, 1})).sum(2);
  return {out, alpha};
}

FftAttentionImpl::FftAttentionImpl(int64_t channels, int64_t se_reduction)
    : pre1(channels, channels), pre2(channels, channels), post(channels, channels), se(channels, se_reduction) {
  register_module("pre1", pre1);
  register_module("pre2", pre2);
  register_module("post", post);
  register_module("se", se);
}

torch::Tensor FftAttentionImpl::magnitude(const torch::Tensor& y) { return torch::abs(torch::fft::fft2(y)); }

FftAttentionOutput FftAttentionImpl::detail(const torch::Tensor& x) {
  FftAttentionOutput r;
  r.y = pre2(pre1(x));
  r.spectrum = magnitude(r.y);
  r.gate = se->gate(post(r.spectrum));
  r.out = x + x * r.gate;
  return r;
}

NestedLstmBlockImpl::NestedLstmBlockImpl(int64_t ch, int64_t s, int64_t depth, int64_t se_reduction)
    : channels(ch),
      paths(s),
      lstm(ch, ch, depth),
      tam(ch),
      bn(s * ch),
      fft(s * ch, se_reduction),
      mix(torch::nn::Conv2dOptions(s * ch, ch, 1)) {
  register_module("lstm", lstm);
  register_module("tam", tam);
  register_module("bn", bn);
  register_module("fft", fft);
  register_module("mix", mix);
}

NestedTrace NestedLstmBlockImpl::trace(const torch::Tensor& x) {
  if (x.dim() != 5 || x.size(1) != channels)
    throw DataError(DataError::Kind::kShape, "nested block expects (B, " + std::to_string(channels) + ", t, A, L), got " + shape_str(x));
  const auto plan = plan_windows(x.size(2), paths);
  const int64_t b = x.size(0), a = x.size(3), l = x.size(4);
  std::vector<torch::Tensor> segs;
  for (const auto& [start, end] : plan.segments) segs.push_back(x.narrow(2, start, end - start));
  // paths share weights, so fold them into the batch: (B*S, C, seg, A, L)
  auto folded = torch::stack(segs, 1).reshape({b * paths, channels, plan.seg_len, a, l});
  auto att = tam->attend(lstm(folded));
  NestedTrace tr;
  tr.paths = att.out.reshape({b, paths * channels, a, l});
  tr.alpha = att.alpha.reshape({b, paths, plan.seg_len});
  tr.fft = fft->detail(bn(tr.paths));
  tr.out = mix(tr.fft.out);
  return tr;
}

ReconNetImpl::ReconNetImpl(ReconConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const int64_t c = cfg_.base_channels;
  res0 = register_module("res0", ResBlock3d(1, c));
  res1 = register_module("res1", ResBlock3d(c, 2 * c));
  res2 = register_module("res2", ResBlock3d(2 * c, 4 * c));
  nest0 = register_module("nest0", NestedLstmBlock(c, cfg_.paths, cfg_.convlstm_depth, cfg_.se_reduction));
  nest1 = register_module("nest1", NestedLstmBlock(2 * c, cfg_.paths, cfg_.convlstm_depth, cfg_.se_reduction));
  nest2 = register_module("nest2", NestedLstmBlock(4 * c, cfg_.paths, cfg_.convlstm_depth, cfg_.se_reduction));
  if (cfg_.mode == ReconMode::kPatch) {
    p0_adjust = register_module("p0_adjust",
                                torch::nn::Conv2d(torch::nn::Conv2dOptions(c, c, {3, 2}).padding({1, 0})));
  }
  up0 = register_module("up0", ConvBnRelu2d(4 * c, 2 * c));
  se0 = register_module("se0", SqueezeExcite(4 * c, cfg_.se_reduction));
  up1 = register_module("up1", ConvBnRelu2d(4 * c, c));
  se1 = register_module("se1", SqueezeExcite(2 * c, cfg_.se_reduction));
  up2 = register_module("up2", ConvBnRelu2d(2 * c, c));
  head = register_module("head", torch::nn::Conv2d(torch::nn::Conv2dOptions(c, 1, 3).padding(1)));
}

EncoderFeatures ReconNetImpl::encode(const torch::Tensor& x) {
  if (x.dim() != 5 || x.size(1) != 1 || x.size(2) != cfg_.t || x.size(3) != cfg_.a || x.size(4) != cfg_.l) {
    throw DataError(DataError::Kind::kShape, "recon input must be (B, 1, " + std::to_string(cfg_.t) + ", " +
                                                 std::to_string(cfg_.a) + ", " + std::to_string(cfg_.l) +
                                                 "), got " + shape_str(x));
  }
  namespace F = torch::nn::functional;
  EncoderFeatures f;
  if (cfg_.mode == ReconMode::kFull) {
    auto pool = [](const torch::Tensor& v, int64_t kt) {
      return F::max_pool3d(v, F::MaxPool3dFuncOptions({kt, 2, 2}).stride({kt, 2, 2}));
    };
    f.i0 = pool(res0(x), 2);
    f.i1 = pool(res1(f.i0), 2);
    f.i2 = pool(res2(f.i1), 1);
  } else {
    f.i0 = max_pool_time_floor_space_ceil(res0(x), 2, 3, 2);
    f.i1 = max_pool_time_floor_space_ceil(res1(f.i0), 2, 3, 2);
    f.i2 = max_pool_time_floor_space_ceil(res2(f.i1), 1, 1, 2);
  }
  return f;
}

ReconTrace ReconNetImpl::trace(const torch::Tensor& x) {
  ReconTrace tr;
  tr.enc = encode(x);
  tr.p0 = nest0(tr.enc.i0);
  tr.p1 = nest1(tr.enc.i1);
  tr.p2 = nest2(tr.enc.i2);
  tr.p0_adj = cfg_.mode == ReconMode::kPatch ? p0_adjust(tr.p0) : tr.p0;
  const int64_t oa = cfg_.out_a(), ol = cfg_.out_l();
  auto d = resize_to(up0(tr.p2), tr.p1.size(2), tr.p1.size(3));
  tr.d0 = se0(torch::cat({d, tr.p1}, 1));
  d = resize_to(up1(tr.d0), tr.p0_adj.size(2), tr.p0_adj.size(3));
  tr.d1 = se1(torch::cat({d, tr.p0_adj}, 1));
  tr.d2 = resize_to(up2(tr.d1), oa, ol);
  tr.out = torch::relu(head(tr.d2));
  return tr;
}

}  // namespace swe::nn
