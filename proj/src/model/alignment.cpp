// SPDX-License-Identifier: Apache-2.0
#include "bevseg/model/alignment.hpp"

namespace bevseg::model {

Tensor preprocess(const ImageU8& img, const PreprocSpec& spec) {
  require(img.height >= 2 && img.width >= 2, "preprocess: degenerate image");
  require(spec.crop_h <= spec.resize_h, "preprocess: crop taller than resized image");
  Tensor t = image_to_chw(img);
  t = resize_bilinear_chw(t, spec.resize_h, spec.resize_w);
  Tensor out({3, spec.crop_h, spec.resize_w});
  const int off = spec.resize_h - spec.crop_h;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < spec.crop_h; ++y)
      for (int x = 0; x < spec.resize_w; ++x)
        out.at(0, c, y, x) = (t.at(0, c, y + off, x) - spec.mean[c]) / spec.stdev[c];
  return out;
}

AlignmentPipeline::AlignmentPipeline(const PipelineShape& shape)
    : shape_(shape),
      b1_("backbone.b1", 3, shape.backbone_channels[0], 2),
      b2_("backbone.b2", shape.backbone_channels[0], shape.backbone_channels[1], 2),
      b3_("backbone.b3", shape.backbone_channels[1], shape.backbone_channels[2], 1),
      b4_("backbone.b4", shape.backbone_channels[2], shape.feature_channels, 1),
      tf_("transformer", shape.feature_channels, shape.transformer_heads,
          shape.transformer_layers, shape.feature_rows, shape.transformer_ff_mult),
      h1_("head.h1", shape.feature_channels, shape.head_channels, 2),
      h2_("head.h2", shape.head_channels, shape.head_channels, 2),
      h3_("head.h3", shape.head_channels, shape.latent_channels, 3, 2, 1) {
  require(shape.feature_channels % shape.transformer_heads == 0,
          "AlignmentPipeline: heads must divide feature channels");
}

void AlignmentPipeline::init(Rng& rng) {
  b1_.init(rng);
  b2_.init(rng);
  b3_.init(rng);
  b4_.init(rng);
  tf_.init(rng);
  h1_.init(rng);
  h2_.init(rng);
  h3_.init(rng);
}

void AlignmentPipeline::params(ParamRefs& out) {
  b1_.params(out);
  b2_.params(out);
  b3_.params(out);
  b4_.params(out);
  if (shape_.use_transformer) tf_.params(out);
  h1_.params(out);
  h2_.params(out);
  h3_.params(out);
}

void AlignmentPipeline::named_tensors(NamedTensors& out) {
  ParamRefs ps;
  params(ps);
  for (auto* p : ps) out.emplace_back(p->name, &p->w);
  std::vector<std::pair<std::string, Tensor*>> bufs;
  b1_.buffers(bufs);
  b2_.buffers(bufs);
  b3_.buffers(bufs);
  b4_.buffers(bufs);
  h1_.buffers(bufs);
  h2_.buffers(bufs);
  for (auto& [n, t] : bufs) out.emplace_back(n, t);
}

void AlignmentPipeline::set_train(bool t) {
  b1_.set_train(t);
  b2_.set_train(t);
  b3_.set_train(t);
  b4_.set_train(t);
  h1_.set_train(t);
  h2_.set_train(t);
}

void AlignmentPipeline::set_frozen(bool f) {
  b1_.set_frozen(f);
  b2_.set_frozen(f);
  b3_.set_frozen(f);
  b4_.set_frozen(f);
  h1_.set_frozen(f);
  h2_.set_frozen(f);
}

Tensor AlignmentPipeline::forward(const Tensor& x) {
  Tensor f = b4_.forward(b3_.forward(b2_.forward(b1_.forward(x))));
  if (shape_.use_transformer) f = tf_.forward(f);
  return h3_.forward(h2_.forward(h1_.forward(f)));
}

Tensor AlignmentPipeline::backward(const Tensor& dz) {
  Tensor g = h1_.backward(h2_.backward(h3_.backward(dz)));
  if (shape_.use_transformer) g = tf_.backward(g);
  return b1_.backward(b2_.backward(b3_.backward(b4_.backward(g))));
}

}  // namespace bevseg::model
