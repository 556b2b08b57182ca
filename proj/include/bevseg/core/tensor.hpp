// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <vector>

#include "bevseg/core/common.hpp"

namespace bevseg {

// Dense float tensor, row-major, up to 4 axes (N, C, H, W convention).
// Deliberately minimal: layers own their math, this is just storage.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::initializer_list<int> shape) { reset(std::vector<int>(shape)); }
  explicit Tensor(const std::vector<int>& shape) { reset(shape); }

  void reset(const std::vector<int>& shape) {
    require(!shape.empty() && shape.size() <= 4, "tensor rank must be 1..4");
    ndim_ = static_cast<int>(shape.size());
    int64_t n = 1;
    // dims are right-aligned into the (N, C, H, W) slots so that at() works
    // for images [C,H,W] and planes [H,W] as well
    for (int i = 0; i < 4; ++i) dim_[i] = 1;
    for (int i = 0; i < ndim_; ++i) {
      dim_[4 - ndim_ + i] = shape[i];
      require(shape[i] > 0, "tensor dims must be positive");
      n *= shape[i];
    }
    v_.assign(static_cast<size_t>(n), 0.0f);
  }

  bool empty() const { return v_.empty(); }
  int ndim() const { return ndim_; }
  int dim(int i) const { return dim_[4 - ndim_ + i]; }
  int64_t numel() const { return static_cast<int64_t>(v_.size()); }
  std::vector<int> shape() const {
    return std::vector<int>(dim_.begin() + (4 - ndim_), dim_.end());
  }
  bool same_shape(const Tensor& o) const { return ndim_ == o.ndim_ && dim_ == o.dim_; }

  float* data() { return v_.data(); }
  const float* data() const { return v_.data(); }

  float& operator[](int64_t i) { return v_[static_cast<size_t>(i)]; }
  float operator[](int64_t i) const { return v_[static_cast<size_t>(i)]; }

  // (n, c, h, w) indexing; trailing axes of lower-rank tensors are size 1.
  float& at(int n, int c, int h, int w) {
    return v_[((static_cast<int64_t>(n) * dim_[1] + c) * dim_[2] + h) * dim_[3] + w];
  }
  float at(int n, int c, int h, int w) const {
    return v_[((static_cast<int64_t>(n) * dim_[1] + c) * dim_[2] + h) * dim_[3] + w];
  }

  void zero() { std::fill(v_.begin(), v_.end(), 0.0f); }
  void fill(float x) { std::fill(v_.begin(), v_.end(), x); }

  std::vector<float>& vec() { return v_; }
  const std::vector<float>& vec() const { return v_; }

 private:
  int ndim_ = 0;
  std::array<int, 4> dim_{1, 1, 1, 1};
  std::vector<float> v_;
};

inline bool all_finite(const Tensor& t) {
  for (int64_t i = 0; i < t.numel(); ++i)
    if (!std::isfinite(t[i])) return false;
  return true;
}

}  // namespace bevseg
