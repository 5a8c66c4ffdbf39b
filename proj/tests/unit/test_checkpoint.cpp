// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <torch/torch.h>

#include "swe/error.hpp"
#include "swe/nn/checkpoint.hpp"
#include "swe/nn/denoise.hpp"
#include "swe/nn/recon.hpp"
#include "swe/tensor_file.hpp"
#include "test_support.hpp"

using namespace swe;
using namespace swe::nn;

namespace {

DataError::Kind load_kind(torch::nn::Module& m, const std::string& fp, const std::filesystem::path& p) {
  try {
    load_checkpoint(m, fp, p);
  } catch (const DataError& e) {
    return e.kind();
  }
  FAIL("load_checkpoint accepted a bad file");
  return DataError::Kind::kGeneric;
}

ReconConfig desk_recon() {
  ReconConfig rc;
  rc.t = 32;
  rc.a = 27;
  rc.l = 10;
  rc.base_channels = 4;
  return rc;
}

}  // namespace

TEST_CASE("save then load reproduces inference exactly", "[checkpoint]") {
  testing::TempDir dir("ckpt");
  const auto rc = desk_recon();
  torch::manual_seed(1);
  ReconNet a(rc);
  // One training-mode pass moves the batch-norm running statistics off their defaults.
  a->train();
  a->forward(torch::rand({4, 1, 32, 27, 10}));
  a->eval();
  save_checkpoint(*a, rc.fingerprint(), dir / "r.swec");
  CHECK(checkpoint_fingerprint(dir / "r.swec") == rc.fingerprint());

  torch::manual_seed(2);
  ReconNet b(rc);
  load_checkpoint(*b, rc.fingerprint(), dir / "r.swec");
  b->eval();
  torch::NoGradGuard ng;
  const auto x = torch::rand({2, 1, 32, 27, 10});
  CHECK(torch::equal(a->forward(x), b->forward(x)));

  save_checkpoint(*b, rc.fingerprint(), dir / "r2.swec");
  CHECK(read_file_bytes(dir / "r.swec") == read_file_bytes(dir / "r2.swec"));
}

TEST_CASE("checkpoint errors", "[checkpoint]") {
  testing::TempDir dir("ckpt-err");
  DenoiserConfig dc;
  dc.base_channels = 4;
  torch::manual_seed(3);
  DenoiserNet net(dc);
  save_checkpoint(*net, dc.fingerprint(), dir / "d.swec");

  SECTION("fingerprint mismatch") {
    DenoiserConfig other = dc;
    other.base_channels = 8;
    DenoiserNet wider(other);
    CHECK(load_kind(*wider, other.fingerprint(), dir / "d.swec") == DataError::Kind::kFingerprint);
  }
  SECTION("architecture mismatch under a forged fingerprint") {
    DenoiserConfig other = dc;
    other.base_channels = 8;
    DenoiserNet wider(other);
    CHECK(load_kind(*wider, dc.fingerprint(), dir / "d.swec") == DataError::Kind::kShape);
  }
  SECTION("corruption") {
    auto bytes = read_file_bytes(dir / "d.swec");
    auto flipped = bytes;
    flipped[flipped.size() / 2] ^= 0x40;
    write_file_bytes(dir / "flip.swec", flipped);
    CHECK(load_kind(*net, dc.fingerprint(), dir / "flip.swec") == DataError::Kind::kChecksum);

    write_file_bytes(dir / "short.swec", bytes.substr(0, bytes.size() / 3));
    CHECK(load_kind(*net, dc.fingerprint(), dir / "short.swec") == DataError::Kind::kTruncated);

    auto magic = bytes;
    magic[0] = 'Z';
    write_file_bytes(dir / "magic.swec", magic);
    CHECK(load_kind(*net, dc.fingerprint(), dir / "magic.swec") == DataError::Kind::kBadMagic);
  }
  SECTION("missing file") {
    CHECK_THROWS_AS(load_checkpoint(*net, dc.fingerprint(), dir / "absent.swec"), DataError);
  }
}
