// SPDX-License-Identifier: Apache-2.0
#include "bevseg/nn/loss.hpp"

namespace bevseg::nn {

double weighted_bce(const Tensor& y_hat, const Tensor& y, const std::vector<float>& class_w,
                    Tensor* d_y_hat) {
  require(y_hat.same_shape(y), "weighted_bce: shape mismatch");
  require(y_hat.ndim() == 4, "weighted_bce: expected [N,K,H,W]");
  const int64_t n = y_hat.dim(0), k = y_hat.dim(1);
  const int64_t cells = static_cast<int64_t>(y_hat.dim(2)) * y_hat.dim(3);
  require(static_cast<int64_t>(class_w.size()) == k, "weighted_bce: weight count mismatch");
  for (int64_t i = 0; i < y.numel(); ++i)
    require(y[i] == 0.0f || y[i] == 1.0f, "weighted_bce: target must be binary");

  const int64_t m = n * k * cells;
  const double inv_m = 1.0 / static_cast<double>(m);
  constexpr float eps = static_cast<float>(kBceEps);
  double total = 0;
  if (d_y_hat) d_y_hat->reset(y_hat.shape());
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t c = 0; c < k; ++c) {
      const float w = class_w[c];
      const int64_t base = (i * k + c) * cells;
      for (int64_t j = 0; j < cells; ++j) {
        float p = y_hat[base + j];
        if (p < eps) p = eps;
        if (p > 1 - eps) p = 1 - eps;
        const float t = y[base + j];
        total += -static_cast<double>(w) *
                 (t * std::log(static_cast<double>(p)) +
                  (1.0 - t) * std::log(1.0 - static_cast<double>(p)));
        if (d_y_hat)
          (*d_y_hat)[base + j] =
              static_cast<float>(w * (-t / p + (1.0f - t) / (1.0f - p)) * inv_m);
      }
    }
  }
  return total * inv_m;
}

double mse(const Tensor& pred, const Tensor& target, Tensor* d_pred) {
  require(pred.same_shape(target), "mse: shape mismatch");
  const int64_t m = pred.numel();
  double total = 0;
  if (d_pred) d_pred->reset(pred.shape());
  for (int64_t i = 0; i < m; ++i) {
    const double d = static_cast<double>(pred[i]) - target[i];
    total += d * d;
    if (d_pred) (*d_pred)[i] = static_cast<float>(2.0 * d / m);
  }
  return total / m;
}

}  // namespace bevseg::nn
