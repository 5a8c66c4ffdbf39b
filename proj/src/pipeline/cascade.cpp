// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#include "swe/pipeline/cascade.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include <nlohmann/json.hpp>

#include "swe/error.hpp"
#include "swe/metrics.hpp"
#include "swe/nn/checkpoint.hpp"
#include "swe/nn/convert.hpp"
#include "swe/tensor_file.hpp"

namespace swe::pipeline {

namespace {

std::string cache_name(std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "yprime_%05zu.swed", i);
  return buf;
}

}  // namespace

torch::Device device_from_env() {
  const char* v = std::getenv("SWE_DEVICE");
  const std::string name = v && *v ? v : "cpu";
  if (name == "cpu") return torch::kCPU;
  if (name.rfind("cuda", 0) == 0) {
    if (!torch::cuda::is_available()) throw ConfigError("SWE_DEVICE=" + name + " but no CUDA device is available");
    return torch::Device(name);
  }
  throw ConfigError("SWE_DEVICE must be 'cpu' or 'cuda[:N]', got '" + name + "'");
}

void check_layout(const nn::ReconConfig& cfg, const RegionLayout& layout) {
  if (static_cast<std::size_t>(cfg.t) != layout.frames_t)
    throw ConfigError("network expects " + std::to_string(cfg.t) + " frames, layout '" + layout.id + "' has " +
                      std::to_string(layout.frames_t));
  if (cfg.mode == nn::ReconMode::kFull) {
    if (static_cast<std::size_t>(cfg.a) != layout.region_axial_px ||
        static_cast<std::size_t>(cfg.l) != layout.region_lateral_px)
      throw ConfigError("full-mode network region size does not match layout '" + layout.id + "'");
  } else if (cfg.out_a() > static_cast<int64_t>(layout.region_axial_px) ||
             cfg.out_l() > static_cast<int64_t>(layout.region_lateral_px)) {
    throw ConfigError("patch footprint is larger than the regions of layout '" + layout.id + "'");
  }
}

PatchGrid recon_patch_grid(const nn::ReconConfig& cfg, const RegionLayout& layout, const InferenceSettings& s) {
  return make_covering_grid(layout.region_axial_px, layout.region_lateral_px, static_cast<std::size_t>(cfg.a),
                            static_cast<std::size_t>(cfg.l), s.stride_a, s.stride_l);
}

Map2 reconstruct_region(nn::ReconNet& net, const MotionVolume& normalized, const RegionLayout& layout,
                        const InferenceSettings& s) {
  const auto& cfg = net->config();
  check_layout(cfg, layout);
  torch::NoGradGuard ng;
  net->eval();
  if (cfg.mode == nn::ReconMode::kFull) {
    auto x = nn::to_tensor(normalized.data).unsqueeze(0).unsqueeze(0).to(s.device);
    return nn::to_map(net->forward(x));
  }
  const auto grid = recon_patch_grid(cfg, layout, s);
  const auto padded = nn::to_tensor(pad_for_grid(normalized.data, grid));
  std::vector<PatchPrediction> preds;
  preds.reserve(grid.anchors.size());
  for (std::size_t start = 0; start < grid.anchors.size(); start += static_cast<std::size_t>(s.batch)) {
    const std::size_t end = std::min(grid.anchors.size(), start + static_cast<std::size_t>(s.batch));
    std::vector<torch::Tensor> xs;
    for (std::size_t i = start; i < end; ++i) {
      const auto& an = grid.anchors[i];
      xs.push_back(padded.narrow(1, static_cast<int64_t>(an.a), cfg.a).narrow(2, static_cast<int64_t>(an.l), cfg.l));
    }
    auto out = net->forward(torch::stack(xs).unsqueeze(1).to(s.device)).to(torch::kCPU);
    for (std::size_t i = start; i < end; ++i)
      preds.push_back({grid.footprint_origin(grid.anchors[i]), nn::to_map(out[static_cast<int64_t>(i - start)])});
  }
  const auto window = tukey2d(grid.out_a, grid.out_l, s.tukey_alpha);
  return overlap_add(preds, layout.region_axial_px, layout.region_lateral_px, window);
}

Map2 primary_reconstruction(nn::ReconNet& net, const DatasetSample& sample, const RegionLayout& layout,
                            const InferenceSettings& s) {
  if (sample.regions.size() != layout.r_regions)
    throw DataError(DataError::Kind::kShape, "sample has " + std::to_string(sample.regions.size()) +
                                                 " regions, layout expects " + std::to_string(layout.r_regions));
  std::vector<Map2> maps;
  for (const auto& region : sample.regions) maps.push_back(reconstruct_region(net, min_max_normalize(region), layout, s));
  return merge_regions(maps, layout, tukey2d(layout.region_axial_px, layout.region_lateral_px, s.tukey_alpha));
}

DenoisedMaps denoise_map(nn::DenoiserNet& net, const Map2& y_prime, const torch::Device& device) {
  torch::NoGradGuard ng;
  net->eval();
  auto out = net->forward(nn::to_tensor(y_prime).unsqueeze(0).unsqueeze(0).to(device));
  return {nn::to_map(out.y), nn::to_map(out.m), nn::to_map(out.y_fg), nn::to_map(out.y_bg)};
}

CascadeModels load_models(const std::filesystem::path& recon_ckpt, const std::filesystem::path& denoiser_ckpt,
                          const nn::ReconConfig& fallback_recon, const nn::DenoiserConfig& fallback_denoiser) {
  CascadeModels m;
  if (recon_ckpt.empty()) {
    m.recon = nn::ReconNet(fallback_recon);
  } else {
    const auto fp = nn::checkpoint_fingerprint(recon_ckpt);
    m.recon = nn::ReconNet(nn::ReconConfig::from_fingerprint(fp));
    nn::load_checkpoint(*m.recon, fp, recon_ckpt);
    m.recon_trained = true;
  }
  if (denoiser_ckpt.empty()) {
    m.denoiser = nn::DenoiserNet(fallback_denoiser);
  } else {
    const auto fp = nn::checkpoint_fingerprint(denoiser_ckpt);
    m.denoiser = nn::DenoiserNet(nn::DenoiserConfig::from_fingerprint(fp));
    nn::load_checkpoint(*m.denoiser, fp, denoiser_ckpt);
    m.denoiser_trained = true;
  }
  return m;
}

CascadeResult run_cascade(CascadeModels& models, const DatasetSample& sample, const RegionLayout& layout,
                          const InferenceSettings& s) {
  models.recon->to(s.device);
  models.denoiser->to(s.device);
  const Map2 yp = primary_reconstruction(models.recon, sample, layout, s);
  const auto d = denoise_map(models.denoiser, yp, s.device);
  CascadeResult r;
  r.y_prime_kpa = yp;
  r.y_kpa = d.y;
  for (auto& v : r.y_prime_kpa.values()) v = static_cast<float>(v * kReferenceKpa);
  for (auto& v : r.y_kpa.values()) v = static_cast<float>(v * kReferenceKpa);
  r.m = d.m;
  r.mask = metrics::binarize(d.m, 0.5f);
  r.untrained = !(models.recon_trained && models.denoiser_trained);
  for (float v : r.y_kpa.values())
    if (!std::isfinite(v)) throw NumericError("cascade produced a non-finite modulus");
  return r;
}

void write_yprime_cache(const std::filesystem::path& dir, const std::vector<Map2>& maps,
                        const std::string& recon_fingerprint) {
  std::filesystem::create_directories(dir);
  nlohmann::json idx;
  idx["format"] = "swe-yprime";
  idx["version"] = 1;
  idx["recon_fingerprint"] = recon_fingerprint;
  idx["count"] = maps.size();
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const std::uint32_t dims[2] = {static_cast<std::uint32_t>(maps[i].rows()), static_cast<std::uint32_t>(maps[i].cols())};
    write_tensor(dir / cache_name(i), dims, maps[i].values());
  }
  std::ofstream(dir / "index.json") << idx.dump(2) << "\n";
}

std::vector<Map2> read_yprime_cache(const std::filesystem::path& dir, std::size_t expected_count) {
  const auto idx_path = dir / "index.json";
  if (!std::filesystem::exists(idx_path)) throw ConfigError("no Y' cache at " + dir.string());
  nlohmann::json idx;
  try {
    idx = nlohmann::json::parse(read_file_bytes(idx_path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("Y' cache index is not valid JSON: " + std::string(e.what()));
  }
  if (idx.value("format", "") != "swe-yprime") throw DataError(DataError::Kind::kBadMagic, "not a Y' cache index");
  if (idx.value("count", std::size_t{0}) != expected_count)
    throw DataError(DataError::Kind::kShape, "Y' cache holds " + std::to_string(idx.value("count", 0)) +
                                                 " maps, dataset has " + std::to_string(expected_count) + " samples");
  std::vector<Map2> out;
  for (std::size_t i = 0; i < expected_count; ++i) {
    const auto blob = read_tensor(dir / cache_name(i));
    if (blob.dims.size() != 2) throw DataError(DataError::Kind::kShape, "Y' cache entries must be 2D");
    Map2 m(blob.dims[0], blob.dims[1]);
    std::copy(blob.values.begin(), blob.values.end(), m.values().begin());
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace swe::pipeline
