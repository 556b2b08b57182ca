// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>

#include "bevseg/core/image.hpp"
#include "bevseg/model/autoencoder.hpp"
#include "bevseg/nn/transformer.hpp"

namespace bevseg::model {

struct PreprocSpec {
  int resize_h = 128, resize_w = 352;
  int crop_h = 128;  // bottom-anchored
  std::array<float, 3> mean{0.5f, 0.5f, 0.5f};
  std::array<float, 3> stdev{0.25f, 0.25f, 0.25f};
};

// resize -> bottom crop -> per-channel normalization. [3, crop_h, resize_w]
Tensor preprocess(const ImageU8& img, const PreprocSpec& spec);

struct PipelineShape {
  int feature_channels = 64;
  std::array<int, 4> backbone_channels{32, 48, 64, 64};
  int head_channels = 64;
  int latent_channels = 64;
  int transformer_layers = 2;
  int transformer_heads = 4;
  int transformer_ff_mult = 4;
  int feature_rows = 32;  // crop_h / 4
  bool use_transformer = true;
};

// Image -> latent. Backbone at output stride 4, column-wise transformer over
// the vertical axis, then a stride-8 conv head onto the latent grid.
class AlignmentPipeline {
 public:
  AlignmentPipeline() = default;
  explicit AlignmentPipeline(const PipelineShape& shape);

  void init(Rng& rng);
  void params(ParamRefs& out);
  void named_tensors(NamedTensors& out);
  void set_train(bool t);
  void set_frozen(bool f);

  Tensor forward(const Tensor& x);  // [N,3,H,W] -> [N,C,H/32,W/32]
  Tensor backward(const Tensor& dz);

  // the transformer stage alone, for the column-contract checks
  Tensor transform_features(const Tensor& f) { return tf_.forward(f); }
  bool has_transformer() const { return shape_.use_transformer; }

 private:
  PipelineShape shape_;
  nn::ConvBlock b1_, b2_, b3_, b4_;
  nn::ColumnTransformer tf_;
  nn::ConvBlock h1_, h2_;
  nn::Conv2d h3_;
};

}  // namespace bevseg::model
