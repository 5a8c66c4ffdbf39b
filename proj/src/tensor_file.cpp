// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#include "swe/tensor_file.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include "swe/error.hpp"

namespace swe {

namespace {

constexpr char kMagic[4] = {'S', 'W', 'E', 'D'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(std::string_view in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

}  // namespace

std::size_t TensorBlob::element_count() const {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         [](std::size_t a, std::uint32_t b) { return a * b; });
}

std::uint32_t crc32_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  constexpr std::size_t kChunk = 1u << 30;
  for (std::size_t pos = 0; pos < bytes.size(); pos += kChunk) {
    const std::size_t n = std::min(kChunk, bytes.size() - pos);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + pos), static_cast<uInt>(n));
  }
  return static_cast<std::uint32_t>(crc);
}

std::string encode_tensor(std::span<const std::uint32_t> dims, std::span<const float> values) {
  const std::size_t expected = std::accumulate(
      dims.begin(), dims.end(), std::size_t{1}, [](std::size_t a, std::uint32_t b) { return a * b; });
  if (expected != values.size())
    throw DataError(DataError::Kind::kShape, "encode_tensor: dims do not match value count");
  std::string out;
  out.reserve(16 + 4 * dims.size() + 4 * values.size());
  out.append(kMagic, 4);
  put_u32(out, kTensorFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(dims.size()));
  for (auto d : dims) put_u32(out, d);
  for (float v : values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  put_u32(out, crc32_of(out));
  return out;
}

TensorBlob decode_tensor(std::string_view bytes) {
  using Kind = DataError::Kind;
  if (bytes.size() < 12) throw DataError(Kind::kTruncated, "tensor: header truncated");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw DataError(Kind::kBadMagic, "tensor: bad magic (expected SWED)");
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kTensorFormatVersion) {
    std::ostringstream os;
    os << "tensor: format version " << version << " unsupported (expected " << kTensorFormatVersion << ")";
    throw DataError(Kind::kVersionMismatch, os.str());
  }
  const std::uint32_t rank = get_u32(bytes, 8);
  const std::size_t header = 12 + 4 * static_cast<std::size_t>(rank);
  if (bytes.size() < header) throw DataError(Kind::kTruncated, "tensor: dims truncated");
  TensorBlob blob;
  blob.dims.resize(rank);
  for (std::uint32_t i = 0; i < rank; ++i) blob.dims[i] = get_u32(bytes, 12 + 4 * i);
  const std::size_t count = blob.element_count();
  const std::size_t expected = header + 4 * count + 4;
  if (bytes.size() != expected) {
    std::ostringstream os;
    os << "tensor: payload length mismatch (" << bytes.size() << " bytes, expected " << expected << ")";
    throw DataError(Kind::kTruncated, os.str());
  }
  const std::uint32_t stored = get_u32(bytes, expected - 4);
  if (stored != crc32_of(bytes.substr(0, expected - 4)))
    throw DataError(Kind::kChecksum, "tensor: CRC32 mismatch");
  blob.values.resize(count);
  for (std::size_t i = 0; i < count; ++i)
    blob.values[i] = std::bit_cast<float>(get_u32(bytes, header + 4 * i));
  return blob;
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("short write to " + path.string());
}

void write_tensor(const std::filesystem::path& path, std::span<const std::uint32_t> dims,
                  std::span<const float> values) {
  write_file_bytes(path, encode_tensor(dims, values));
}

TensorBlob read_tensor(const std::filesystem::path& path) {
  try {
    return decode_tensor(read_file_bytes(path));
  } catch (const DataError& e) {
    throw DataError(e.kind(), path.filename().string() + ": " + e.what());
  }
}

}  // namespace swe
