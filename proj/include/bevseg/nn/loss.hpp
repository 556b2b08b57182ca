// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

#include "bevseg/core/tensor.hpp"

namespace bevseg::nn {

constexpr double kBceEps = 1e-7;

// Class-weighted binary cross entropy, averaged over batch, channels and
// cells. Predictions are clamped to [eps, 1-eps]; the clamp is treated as
// identity in the gradient (prediction paths saturate their own gradient
// through the sigmoid long before the clamp engages).
//
// Templated so tests can run the identical formula in double precision
// against finite differences.
template <typename T>
T weighted_bce_ref(const T* y_hat, const T* y, const T* class_w, int64_t n, int64_t channels,
                   int64_t cells, T* grad = nullptr, T eps = static_cast<T>(kBceEps)) {
  T total = 0;
  const int64_t m = n * channels * cells;
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t k = 0; k < channels; ++k) {
      const T w = class_w[k];
      const int64_t base = (i * channels + k) * cells;
      for (int64_t j = 0; j < cells; ++j) {
        T p = y_hat[base + j];
        if (p < eps) p = eps;
        if (p > 1 - eps) p = 1 - eps;
        const T t = y[base + j];
        total += -w * (t * std::log(p) + (1 - t) * std::log(1 - p));
        if (grad) grad[base + j] = w * (-t / p + (1 - t) / (1 - p)) / static_cast<T>(m);
      }
    }
  }
  return total / static_cast<T>(m);
}

template <typename T>
T mse_ref(const T* a, const T* b, int64_t m, T* grad = nullptr) {
  T total = 0;
  for (int64_t i = 0; i < m; ++i) {
    const T d = a[i] - b[i];
    total += d * d;
    if (grad) grad[i] = 2 * d / static_cast<T>(m);
  }
  return total / static_cast<T>(m);
}

// Float tensor front-ends used by the training loops. `y` must be {0,1}.
double weighted_bce(const Tensor& y_hat, const Tensor& y, const std::vector<float>& class_w,
                    Tensor* d_y_hat);
double mse(const Tensor& pred, const Tensor& target, Tensor* d_pred);

}  // namespace bevseg::nn
