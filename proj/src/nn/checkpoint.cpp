// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#include "swe/nn/checkpoint.hpp"

#include <cstring>
#include <map>
#include <vector>

#include "swe/error.hpp"
#include "swe/tensor_file.hpp"

namespace swe::nn {

namespace {

constexpr char kMagic[4] = {'S', 'W', 'E', 'C'};

template <typename U>
void put(std::string& out, U v) {
  unsigned char b[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF);
  out.append(reinterpret_cast<const char*>(b), sizeof(U));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return static_cast<U>(v);
  }

  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw DataError(DataError::Kind::kTruncated, "checkpoint is truncated");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

struct Parsed {
  std::string fingerprint;
  std::map<std::string, TensorBlob> tensors;
};

Parsed parse(const std::string& bytes, bool fingerprint_only) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw DataError(DataError::Kind::kBadMagic, "not a checkpoint file");
  Reader r(std::string_view(bytes).substr(0, bytes.size() - 4));
  r.take(4);
  if (const auto v = r.get<std::uint32_t>(); v != kCheckpointVersion)
    throw DataError(DataError::Kind::kVersionMismatch, "checkpoint version " + std::to_string(v) + " is not supported");
  Parsed p;
  p.fingerprint = std::string(r.take(r.get<std::uint32_t>()));
  if (fingerprint_only) return p;
  Reader tail(std::string_view(bytes).substr(bytes.size() - 4));
  const bool crc_ok = tail.get<std::uint32_t>() == crc32_of(std::string_view(bytes).substr(0, bytes.size() - 4));
  try {
    const auto count = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < count; ++i) {
      std::string name(r.take(r.get<std::uint32_t>()));
      p.tensors.emplace(std::move(name), decode_tensor(r.take(r.get<std::uint64_t>())));
    }
  } catch (const DataError& e) {
    // a short file reads as truncation; any other damage is a checksum failure
    if (e.kind() == DataError::Kind::kTruncated || crc_ok) throw;
  }
  if (!crc_ok) throw DataError(DataError::Kind::kChecksum, "checkpoint checksum mismatch");
  return p;
}

std::vector<std::pair<std::string, torch::Tensor>> state_of(const torch::nn::Module& model) {
  std::vector<std::pair<std::string, torch::Tensor>> out;
  for (const auto& kv : model.named_parameters(true)) out.emplace_back(kv.key(), kv.value());
  for (const auto& kv : model.named_buffers(true)) out.emplace_back(kv.key(), kv.value());
  return out;
}

}  // namespace

void save_checkpoint(const torch::nn::Module& model, const std::string& fingerprint,
                     const std::filesystem::path& path) {
  std::string out(kMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(fingerprint.size()));
  out += fingerprint;
  const auto state = state_of(model);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(state.size()));
  for (const auto& [name, t] : state) {
    auto f = t.detach().to(torch::kCPU, torch::kFloat32).contiguous();
    std::vector<std::uint32_t> dims;
    for (auto d : f.sizes()) dims.push_back(static_cast<std::uint32_t>(d));
    const auto blob = encode_tensor(dims, std::span<const float>(f.data_ptr<float>(), static_cast<std::size_t>(f.numel())));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint64_t>(out, blob.size());
    out += blob;
  }
  put<std::uint32_t>(out, crc32_of(out));
  write_file_bytes(path, out);
}

void load_checkpoint(torch::nn::Module& model, const std::string& fingerprint, const std::filesystem::path& path) {
  const auto p = parse(read_file_bytes(path), false);
  if (p.fingerprint != fingerprint) {
    throw DataError(DataError::Kind::kFingerprint,
                    "checkpoint " + path.string() + " was written for '" + p.fingerprint + "', expected '" + fingerprint + "'");
  }
  torch::NoGradGuard ng;
  for (auto& [name, t] : state_of(model)) {
    const auto it = p.tensors.find(name);
    if (it == p.tensors.end()) throw DataError(DataError::Kind::kShape, "checkpoint lacks tensor '" + name + "'");
    const auto& blob = it->second;
    std::vector<int64_t> dims(blob.dims.begin(), blob.dims.end());
    if (!t.sizes().equals(dims)) throw DataError(DataError::Kind::kShape, "checkpoint tensor '" + name + "' has the wrong shape");
    auto src = torch::from_blob(const_cast<float*>(blob.values.data()), dims, torch::kFloat32);
    t.copy_(src.to(t.dtype()));
  }
}

std::string checkpoint_fingerprint(const std::filesystem::path& path) {
  return parse(read_file_bytes(path), true).fingerprint;
}

}  // namespace swe::nn
