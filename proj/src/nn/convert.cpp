// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#include "swe/nn/convert.hpp"

#include <algorithm>
#include <sstream>

#include "swe/error.hpp"

namespace swe::nn {

torch::Tensor to_tensor(const Grid3<float>& g) {
  const auto d = g.dims();
  return torch::from_blob(const_cast<float*>(g.values().data()),
                          {static_cast<int64_t>(d[0]), static_cast<int64_t>(d[1]), static_cast<int64_t>(d[2])},
                          torch::kFloat32)
      .clone();
}

torch::Tensor to_tensor(const Map2& m) {
  return torch::from_blob(const_cast<float*>(m.values().data()),
                          {static_cast<int64_t>(m.rows()), static_cast<int64_t>(m.cols())}, torch::kFloat32)
      .clone();
}

torch::Tensor to_tensor(const Mask2& m) {
  return to_tensor(m.cast<float>());
}

Map2 to_map(const torch::Tensor& t) {
  auto x = t.detach().to(torch::kCPU, torch::kFloat32).contiguous();
  while (x.dim() > 2 && x.size(0) == 1) x = x.squeeze(0);
  if (x.dim() != 2) {
    std::ostringstream os;
    os << "to_map: expected a single 2D map, got " << t.sizes();
    throw DataError(DataError::Kind::kShape, os.str());
  }
  Map2 out(static_cast<std::size_t>(x.size(0)), static_cast<std::size_t>(x.size(1)));
  std::copy_n(x.data_ptr<float>(), out.size(), out.values().begin());
  return out;
}

}  // namespace swe::nn
