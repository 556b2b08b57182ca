// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "bevseg/nn/param.hpp"

namespace bevseg::nn {

// Layers cache whatever their backward pass needs during forward. The nets
// run strictly layer-by-layer (one forward, then one backward per step), so a
// single cache slot per layer is enough. All layers are single-threaded and
// deterministic for fixed input shapes.

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::string name, int cin, int cout, int ksize, int stride, int pad);

  void init(Rng& rng);
  void params(ParamRefs& out);

  Tensor forward(const Tensor& x);
  // Returns dx; accumulates into weight/bias grads.
  Tensor backward(const Tensor& dy);

  int out_h(int h) const { return (h + 2 * pad_ - k_) / stride_ + 1; }
  int out_w(int w) const { return (w + 2 * pad_ - k_) / stride_ + 1; }

  Param weight;  // [cout, cin*k*k]
  Param bias;    // [cout]

 private:
  void im2col(const float* x, int h, int w, float* col) const;
  void col2im(const float* col, int h, int w, float* dx) const;

  int cin_ = 0, cout_ = 0, k_ = 3, stride_ = 1, pad_ = 1;
  Tensor x_;  // cached input
  mutable std::vector<float> col_;
};

// Channel-wise batch normalization with running statistics. Frozen layers act
// like eval mode regardless of the training flag, so a frozen submodule's
// buffers stay bit-identical through later stages.
class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  BatchNorm2d(std::string name, int channels);

  void params(ParamRefs& out);
  void buffers(std::vector<std::pair<std::string, Tensor*>>& out);

  void set_train(bool t) { train_ = t; }
  void set_frozen(bool f) { frozen_ = f; }

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);

  Param gamma, beta;
  Tensor running_mean, running_var;

 private:
  int c_ = 0;
  bool train_ = true, frozen_ = false;
  bool used_batch_stats_ = false;
  double momentum_ = 0.1, eps_ = 1e-5;
  Tensor xhat_;
  std::vector<float> invstd_;
  std::string name_;
};

class ReLU {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);

 private:
  std::vector<uint8_t> mask_;
};

class Sigmoid {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);

 private:
  Tensor y_;
};

// 2x nearest-neighbor upsampling.
class Upsample2x {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);

 private:
  std::vector<int> in_shape_;
};

// conv -> BN -> ReLU, the building block of every conv stack here.
class ConvBlock {
 public:
  ConvBlock() = default;
  ConvBlock(const std::string& name, int cin, int cout, int stride)
      : conv(name + ".conv", cin, cout, 3, stride, 1), bn(name + ".bn", cout) {}

  void init(Rng& rng) { conv.init(rng); }
  void params(ParamRefs& out) {
    conv.params(out);
    bn.params(out);
  }
  void buffers(std::vector<std::pair<std::string, Tensor*>>& out) { bn.buffers(out); }
  void set_train(bool t) { bn.set_train(t); }
  void set_frozen(bool f) { bn.set_frozen(f); }

  Tensor forward(const Tensor& x) { return relu.forward(bn.forward(conv.forward(x))); }
  Tensor backward(const Tensor& dy) { return conv.backward(bn.backward(relu.backward(dy))); }

  Conv2d conv;
  BatchNorm2d bn;
  ReLU relu;
};

}  // namespace bevseg::nn
