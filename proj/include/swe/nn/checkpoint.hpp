// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include <torch/torch.h>

namespace swe::nn {

/// Checkpoint container:
///   "SWEC" | u32 version | u32 len + fingerprint | u32 count |
///   count x (u32 len + name | u64 len + SWED tensor) | u32 CRC32
/// Parameters and buffers are stored by their dotted module path.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const torch::nn::Module& model, const std::string& fingerprint,
                     const std::filesystem::path& path);

/// Throws DataError(kFingerprint) when the stored fingerprint differs, and
/// DataError(kShape) when a tensor is missing or has the wrong shape.
void load_checkpoint(torch::nn::Module& model, const std::string& fingerprint, const std::filesystem::path& path);

std::string checkpoint_fingerprint(const std::filesystem::path& path);

}  // namespace swe::nn
