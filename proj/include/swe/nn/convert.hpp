// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <torch/torch.h>

#include "swe/grid.hpp"

namespace swe::nn {

/// Owning float32 copies: (T, A, L) and (A, L).
torch::Tensor to_tensor(const Grid3<float>& g);
torch::Tensor to_tensor(const Map2& m);
torch::Tensor to_tensor(const Mask2& m);

/// Copies a tensor whose non-unit dims form (A, L) back into a map.
Map2 to_map(const torch::Tensor& t);

}  // namespace swe::nn
