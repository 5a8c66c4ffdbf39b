// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "swe/dataset.hpp"
#include "swe/nn/denoise.hpp"
#include "swe/nn/recon.hpp"
#include "swe/patchwork.hpp"

namespace swe::pipeline {

struct InferenceSettings {
  std::size_t stride_a = 0;  ///< 0: half the output footprint
  std::size_t stride_l = 0;
  double tukey_alpha = 0.5;
  int64_t batch = 32;
  torch::Device device = torch::kCPU;
};

/// Reads SWE_DEVICE ("cpu" when unset). Throws ConfigError for unusable devices.
torch::Device device_from_env();

/// Throws ConfigError when the network's input contract disagrees with the layout.
void check_layout(const nn::ReconConfig& cfg, const RegionLayout& layout);

PatchGrid recon_patch_grid(const nn::ReconConfig& cfg, const RegionLayout& layout, const InferenceSettings& s);

/// One region's map (A x region width) in kPa / 100 from an already normalised volume.
Map2 reconstruct_region(nn::ReconNet& net, const MotionVolume& normalized, const RegionLayout& layout,
                        const InferenceSettings& s);

/// Normalises every region, reconstructs it and merges the regions into Y' (kPa / 100).
Map2 primary_reconstruction(nn::ReconNet& net, const DatasetSample& sample, const RegionLayout& layout,
                            const InferenceSettings& s);

struct DenoisedMaps {
  Map2 y, m, y_fg, y_bg;  ///< y, y_fg, y_bg in kPa / 100
};
DenoisedMaps denoise_map(nn::DenoiserNet& net, const Map2& y_prime, const torch::Device& device = torch::kCPU);

struct CascadeResult {
  Map2 y_prime_kpa;
  Map2 y_kpa;
  Map2 m;      ///< soft mask
  Mask2 mask;  ///< m >= 0.5
  bool untrained = false;
};

struct CascadeModels {
  nn::ReconNet recon{nullptr};
  nn::DenoiserNet denoiser{nullptr};
  bool recon_trained = false;
  bool denoiser_trained = false;
};

/// Builds each network from its checkpoint's fingerprint and loads the weights.
/// An empty path yields a freshly initialised (untrained) network.
CascadeModels load_models(const std::filesystem::path& recon_ckpt, const std::filesystem::path& denoiser_ckpt,
                          const nn::ReconConfig& fallback_recon = {}, const nn::DenoiserConfig& fallback_denoiser = {});

CascadeResult run_cascade(CascadeModels& models, const DatasetSample& sample, const RegionLayout& layout,
                          const InferenceSettings& s);

/// Y' cache: one SWED map per sample plus an index naming the producing network.
void write_yprime_cache(const std::filesystem::path& dir, const std::vector<Map2>& maps,
                        const std::string& recon_fingerprint);
std::vector<Map2> read_yprime_cache(const std::filesystem::path& dir, std::size_t expected_count);

}  // namespace swe::pipeline
