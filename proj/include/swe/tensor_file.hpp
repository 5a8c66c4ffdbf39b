// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace swe {

/// Binary tensor container:
///   "SWED" | u32 version | u32 rank | u32 dims[rank] | f32 payload (LE) | u32 CRC32
/// The CRC covers every byte before it.
inline constexpr std::uint32_t kTensorFormatVersion = 1;

struct TensorBlob {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  std::size_t element_count() const;
};

std::string encode_tensor(std::span<const std::uint32_t> dims, std::span<const float> values);
/// Throws DataError with kind kBadMagic, kVersionMismatch, kTruncated or kChecksum.
TensorBlob decode_tensor(std::string_view bytes);

void write_tensor(const std::filesystem::path& path, std::span<const std::uint32_t> dims,
                  std::span<const float> values);
TensorBlob read_tensor(const std::filesystem::path& path);

std::uint32_t crc32_of(std::string_view bytes);

/// Whole-file helpers shared with the checkpoint container.
std::string read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::string_view bytes);

}  // namespace swe
