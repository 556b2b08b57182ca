// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "bevseg/core/rng.hpp"
#include "bevseg/core/tensor.hpp"

namespace bevseg::nn {

// A trainable tensor with its gradient accumulator. `decay` marks matrix-like
// weights that receive decoupled weight decay; biases and norm affines do not.
struct Param {
  std::string name;
  Tensor w;
  Tensor g;
  bool decay = false;

  void init_shape(const std::vector<int>& shape) {
    w.reset(shape);
    g.reset(shape);
  }
  void zero_grad() { g.zero(); }
};

using ParamRefs = std::vector<Param*>;

// Kaiming-uniform fan-in init, the convention used for every conv/linear here.
inline void init_kaiming(Tensor& w, int fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / fan_in);
  for (int64_t i = 0; i < w.numel(); ++i)
    w[i] = static_cast<float>(rng.uniform(-bound, bound));
}

inline void zero_grads(const ParamRefs& ps) {
  for (Param* p : ps) p->zero_grad();
}

}  // namespace bevseg::nn
