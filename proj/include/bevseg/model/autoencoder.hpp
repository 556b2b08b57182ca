// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <utility>
#include <vector>

#include "bevseg/nn/layers.hpp"

namespace bevseg::model {

using nn::ParamRefs;
using NamedTensors = std::vector<std::pair<std::string, Tensor*>>;

// Stride-8 conv encoder onto the shared latent grid. The final projection is
// conv + BN without a nonlinearity so latents come out roughly zero-mean,
// unit-variance per channel, matching the sqrt-mixing noise model.
class BevEncoder {
 public:
  BevEncoder() = default;
  BevEncoder(int classes, int latent_channels, std::array<int, 3> channels);

  void init(Rng& rng);
  void params(ParamRefs& out);
  void named_tensors(NamedTensors& out);
  void set_train(bool t);
  void set_frozen(bool f);

  Tensor forward(const Tensor& y);  // [N,K,H,W] -> [N,C,H/8,W/8]
  Tensor backward(const Tensor& dz);

 private:
  nn::ConvBlock b1_, b2_, b3_;
  nn::Conv2d proj_;
  nn::BatchNorm2d proj_bn_;
};

// Mirror decoder: three nearest-upsample conv blocks and a sigmoid head.
class BevDecoder {
 public:
  BevDecoder() = default;
  BevDecoder(int classes, int latent_channels, std::array<int, 3> channels);

  void init(Rng& rng);
  void params(ParamRefs& out);
  void named_tensors(NamedTensors& out);
  void set_train(bool t);
  void set_frozen(bool f);

  Tensor forward(const Tensor& z);  // [N,C,h,w] -> [N,K,8h,8w] in (0,1)
  Tensor backward(const Tensor& dy);

 private:
  nn::Upsample2x u1_, u2_, u3_;
  nn::ConvBlock b1_, b2_, b3_;
  nn::Conv2d out_;
  nn::Sigmoid sig_;
};

struct BevAutoencoder {
  BevEncoder encoder;
  BevDecoder decoder;

  BevAutoencoder() = default;
  BevAutoencoder(int classes, int latent_channels, std::array<int, 3> channels)
      : encoder(classes, latent_channels, channels),
        decoder(classes, latent_channels, channels) {}

  void init(Rng& rng) {
    encoder.init(rng);
    decoder.init(rng);
  }
  void named_tensors(NamedTensors& out) {
    encoder.named_tensors(out);
    decoder.named_tensors(out);
  }
  void set_train(bool t) {
    encoder.set_train(t);
    decoder.set_train(t);
  }
};

// z~ = sqrt(1-eta) z + sqrt(eta) eps. eta = 0 returns the input bit-exactly.
Tensor corrupt(const Tensor& z, double eta, Rng& rng);

struct ClassWeights {
  std::vector<float> w;
  std::vector<int> zero_frequency_classes;  // clipped to the max weight
};

// Reciprocal frequencies, clipped to [clip_lo, clip_hi] and normalized to
// mean 1. Zero-frequency classes get the clip ceiling instead of failing.
ClassWeights compute_class_weights(const std::vector<double>& freqs, double clip_lo = 0.1,
                                   double clip_hi = 10.0);

}  // namespace bevseg::model
