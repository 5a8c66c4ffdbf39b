// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <vector>

#include "swe/error.hpp"
#include "swe/tensor_file.hpp"
#include "test_support.hpp"

using namespace swe;

namespace {

DataError::Kind kind_of(const std::string& bytes) {
  try {
    decode_tensor(bytes);
  } catch (const DataError& e) {
    return e.kind();
  }
  FAIL("decode_tensor accepted corrupt bytes");
  return DataError::Kind::kGeneric;
}

}  // namespace

TEST_CASE("tensor round trip is bit exact", "[tensor]") {
  const std::vector<std::uint32_t> dims{2, 3, 4};
  std::vector<float> values(24);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<float>(i) * 0.37f - 3.0f;
  values[5] = -0.0f;
  values[7] = 1e-38f;

  const auto blob = decode_tensor(encode_tensor(dims, values));
  CHECK(blob.dims == dims);
  REQUIRE(blob.values.size() == values.size());
  CHECK(std::memcmp(blob.values.data(), values.data(), values.size() * sizeof(float)) == 0);

  testing::TempDir dir("tensor");
  write_tensor(dir / "t.swed", dims, values);
  const auto back = read_tensor(dir / "t.swed");
  CHECK(back.element_count() == 24);
  CHECK(std::memcmp(back.values.data(), values.data(), values.size() * sizeof(float)) == 0);
}

TEST_CASE("corruptions map to distinct errors", "[tensor]") {
  const std::vector<std::uint32_t> dims{70, 168, 16};
  const std::vector<float> values(70 * 168 * 16, 0.5f);
  const std::string good = encode_tensor(dims, values);
  CHECK(good.substr(0, 4) == "SWED");

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  CHECK(kind_of(bad_magic) == DataError::Kind::kBadMagic);

  std::string bad_version = good;
  bad_version[4] = 9;
  CHECK(kind_of(bad_version) == DataError::Kind::kVersionMismatch);

  CHECK(kind_of(good.substr(0, good.size() - 100)) == DataError::Kind::kTruncated);
  CHECK(kind_of(good.substr(0, 10)) == DataError::Kind::kTruncated);

  std::string flipped = good;
  flipped[100] ^= 0x01;
  CHECK(kind_of(flipped) == DataError::Kind::kChecksum);
}

TEST_CASE("dims must match the value count", "[tensor]") {
  const std::vector<std::uint32_t> dims{2, 2};
  const std::vector<float> values(3, 1.0f);
  CHECK_THROWS_AS(encode_tensor(dims, values), DataError);
}

TEST_CASE("crc32 reference value", "[tensor]") {
  CHECK(crc32_of("123456789") == 0xCBF43926u);
}
