// SPDX-License-Identifier: Apache-2.0
#include "bevseg/model/autoencoder.hpp"

#include <cmath>

namespace bevseg::model {

BevEncoder::BevEncoder(int classes, int latent_channels, std::array<int, 3> ch)
    : b1_("encoder.b1", classes, ch[0], 2),
      b2_("encoder.b2", ch[0], ch[1], 2),
      b3_("encoder.b3", ch[1], ch[2], 2),
      proj_("encoder.proj", ch[2], latent_channels, 3, 1, 1),
      proj_bn_("encoder.proj_bn", latent_channels) {}

void BevEncoder::init(Rng& rng) {
  b1_.init(rng);
  b2_.init(rng);
  b3_.init(rng);
  proj_.init(rng);
}

void BevEncoder::params(ParamRefs& out) {
  b1_.params(out);
  b2_.params(out);
  b3_.params(out);
  proj_.params(out);
  proj_bn_.params(out);
}

void BevEncoder::named_tensors(NamedTensors& out) {
  ParamRefs ps;
  params(ps);
  for (auto* p : ps) out.emplace_back(p->name, &p->w);
  std::vector<std::pair<std::string, Tensor*>> bufs;
  b1_.buffers(bufs);
  b2_.buffers(bufs);
  b3_.buffers(bufs);
  proj_bn_.buffers(bufs);
  for (auto& [n, t] : bufs) out.emplace_back(n, t);
}

void BevEncoder::set_train(bool t) {
  b1_.set_train(t);
  b2_.set_train(t);
  b3_.set_train(t);
  proj_bn_.set_train(t);
}

void BevEncoder::set_frozen(bool f) {
  b1_.set_frozen(f);
  b2_.set_frozen(f);
  b3_.set_frozen(f);
  proj_bn_.set_frozen(f);
}

Tensor BevEncoder::forward(const Tensor& y) {
  return proj_bn_.forward(proj_.forward(b3_.forward(b2_.forward(b1_.forward(y)))));
}

Tensor BevEncoder::backward(const Tensor& dz) {
  return b1_.backward(b2_.backward(b3_.backward(proj_.backward(proj_bn_.backward(dz)))));
}

BevDecoder::BevDecoder(int classes, int latent_channels, std::array<int, 3> ch)
    : b1_("decoder.b1", latent_channels, ch[2], 1),
      b2_("decoder.b2", ch[2], ch[1], 1),
      b3_("decoder.b3", ch[1], ch[0], 1),
      out_("decoder.out", ch[0], classes, 3, 1, 1) {}

void BevDecoder::init(Rng& rng) {
  b1_.init(rng);
  b2_.init(rng);
  b3_.init(rng);
  out_.init(rng);
}

void BevDecoder::params(ParamRefs& out) {
  b1_.params(out);
  b2_.params(out);
  b3_.params(out);
  out_.params(out);
}

void BevDecoder::named_tensors(NamedTensors& out) {
  ParamRefs ps;
  params(ps);
  for (auto* p : ps) out.emplace_back(p->name, &p->w);
  std::vector<std::pair<std::string, Tensor*>> bufs;
  b1_.buffers(bufs);
  b2_.buffers(bufs);
  b3_.buffers(bufs);
  for (auto& [n, t] : bufs) out.emplace_back(n, t);
}

void BevDecoder::set_train(bool t) {
  b1_.set_train(t);
  b2_.set_train(t);
  b3_.set_train(t);
}

void BevDecoder::set_frozen(bool f) {
  b1_.set_frozen(f);
  b2_.set_frozen(f);
  b3_.set_frozen(f);
}

Tensor BevDecoder::forward(const Tensor& z) {
  Tensor h = b1_.forward(u1_.forward(z));
  h = b2_.forward(u2_.forward(h));
  h = b3_.forward(u3_.forward(h));
  return sig_.forward(out_.forward(h));
}

Tensor BevDecoder::backward(const Tensor& dy) {
  Tensor g = out_.backward(sig_.backward(dy));
  g = u3_.backward(b3_.backward(g));
  g = u2_.backward(b2_.backward(g));
  return u1_.backward(b1_.backward(g));
}

Tensor corrupt(const Tensor& z, double eta, Rng& rng) {
  require(eta >= 0.0 && eta <= 1.0, "corrupt: eta must be in [0,1]");
  if (eta == 0.0) return z;
  Tensor out(z.shape());
  const float a = static_cast<float>(std::sqrt(1.0 - eta));
  const float b = static_cast<float>(std::sqrt(eta));
  for (int64_t i = 0; i < z.numel(); ++i) out[i] = a * z[i] + b * rng.normalf();
  return out;
}

ClassWeights compute_class_weights(const std::vector<double>& freqs, double clip_lo,
                                   double clip_hi) {
  require(!freqs.empty(), "compute_class_weights: no frequencies");
  require(clip_lo > 0 && clip_hi >= clip_lo, "compute_class_weights: bad clip range");
  ClassWeights cw;
  std::vector<double> raw(freqs.size());
  for (size_t k = 0; k < freqs.size(); ++k) {
    require(freqs[k] >= 0, "compute_class_weights: negative frequency");
    if (freqs[k] <= 0) {
      raw[k] = clip_hi;
      cw.zero_frequency_classes.push_back(static_cast<int>(k));
    } else {
      raw[k] = std::min(clip_hi, std::max(clip_lo, 1.0 / freqs[k]));
    }
  }
  double mean = 0;
  for (double v : raw) mean += v;
  mean /= static_cast<double>(raw.size());
  for (double v : raw) cw.w.push_back(static_cast<float>(v / mean));
  return cw;
}

}  // namespace bevseg::model
