// Copyright 2026 The swe-cascade Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace swe {

/// Dense row-major 2D grid (rows = axial, cols = lateral).
template <typename T>
class Grid2 {
 public:
  Grid2() = default;
  Grid2(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  bool same_shape(const Grid2& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

  template <typename U>
  Grid2<U> cast() const {
    Grid2<U> out(rows_, cols_);
    std::transform(data_.begin(), data_.end(), out.values().begin(),
                   [](const T& v) { return static_cast<U>(v); });
    return out;
  }

  friend bool operator==(const Grid2&, const Grid2&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

/// Dense row-major 3D grid indexed (t, a, l).
template <typename T>
class Grid3 {
 public:
  Grid3() = default;
  Grid3(std::size_t frames, std::size_t rows, std::size_t cols, T fill = T{})
      : dims_{frames, rows, cols}, data_(frames * rows * cols, fill) {}

  std::size_t frames() const noexcept { return dims_[0]; }
  std::size_t rows() const noexcept { return dims_[1]; }
  std::size_t cols() const noexcept { return dims_[2]; }
  std::array<std::size_t, 3> dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(std::size_t t, std::size_t r, std::size_t c) noexcept {
    return data_[(t * dims_[1] + r) * dims_[2] + c];
  }
  const T& operator()(std::size_t t, std::size_t r, std::size_t c) const noexcept {
    return data_[(t * dims_[1] + r) * dims_[2] + c];
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  friend bool operator==(const Grid3&, const Grid3&) = default;

 private:
  std::array<std::size_t, 3> dims_{0, 0, 0};
  std::vector<T> data_;
};

using Map2 = Grid2<float>;
using Mask2 = Grid2<std::uint8_t>;

}  // namespace swe
