// SPDX-License-Identifier: Apache-2.0
#include "bevseg/nn/transformer.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace bevseg::nn {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<RowMat>;
using CMapRM = Eigen::Map<const RowMat>;

namespace {

inline float gelu(float x) {
  const float c = 0.7978845608028654f;  // sqrt(2/pi)
  const float u = c * (x + 0.044715f * x * x * x);
  return 0.5f * x * (1.0f + std::tanh(u));
}

inline float gelu_grad(float x) {
  const float c = 0.7978845608028654f;
  const float u = c * (x + 0.044715f * x * x * x);
  const float t = std::tanh(u);
  const float du = c * (1.0f + 3.0f * 0.044715f * x * x);
  return 0.5f * (1.0f + t) + 0.5f * x * (1.0f - t * t) * du;
}

}  // namespace

TokenLinear::TokenLinear(std::string name, int in, int out, bool zero_init)
    : in_(in), out_(out), zero_init_(zero_init) {
  weight.name = name + ".weight";
  weight.decay = true;
  weight.init_shape({out, in});
  bias.name = name + ".bias";
  bias.init_shape({out});
}

void TokenLinear::init(Rng& rng) {
  if (!zero_init_) init_kaiming(weight.w, in_, rng);
}

void TokenLinear::params(ParamRefs& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

Tensor TokenLinear::forward(const Tensor& x) {
  require(x.ndim() == 2 && x.dim(1) == in_, "TokenLinear: shape mismatch");
  x_ = x;
  const int t = x.dim(0);
  Tensor y({t, out_});
  CMapRM X(x.data(), t, in_), W(weight.w.data(), out_, in_);
  MapRM Y(y.data(), t, out_);
  Y.noalias() = X * W.transpose();
  Y.rowwise() += Eigen::Map<const Eigen::RowVectorXf>(bias.w.data(), out_);
  return y;
}

Tensor TokenLinear::backward(const Tensor& dy) {
  const int t = dy.dim(0);
  Tensor dx({t, in_});
  CMapRM dY(dy.data(), t, out_), X(x_.data(), t, in_), W(weight.w.data(), out_, in_);
  MapRM dX(dx.data(), t, in_), dW(weight.g.data(), out_, in_);
  dW.noalias() += dY.transpose() * X;
  // serial reduction: Eigen redux order varies with buffer alignment
  for (int i = 0; i < t; ++i) {
    const float* row = dy.data() + static_cast<int64_t>(i) * out_;
    for (int j = 0; j < out_; ++j) bias.g[j] += row[j];
  }
  dX.noalias() = dY * W;
  return dx;
}

TokenLayerNorm::TokenLayerNorm(std::string name, int dim) : dim_(dim) {
  gamma.name = name + ".gamma";
  gamma.init_shape({dim});
  gamma.w.fill(1.0f);
  beta.name = name + ".beta";
  beta.init_shape({dim});
}

void TokenLayerNorm::params(ParamRefs& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
}

Tensor TokenLayerNorm::forward(const Tensor& x) {
  const int t = x.dim(0), c = x.dim(1);
  require(c == dim_, "TokenLayerNorm: dim mismatch");
  Tensor y({t, c});
  xhat_.reset({t, c});
  invstd_.assign(t, 0.0f);
  for (int i = 0; i < t; ++i) {
    const float* row = x.data() + static_cast<int64_t>(i) * c;
    double s = 0, s2 = 0;
    for (int j = 0; j < c; ++j) {
      s += row[j];
      s2 += static_cast<double>(row[j]) * row[j];
    }
    const double mean = s / c;
    const double var = std::max(0.0, s2 / c - mean * mean);
    const float is = static_cast<float>(1.0 / std::sqrt(var + 1e-5));
    invstd_[i] = is;
    float* xh = xhat_.data() + static_cast<int64_t>(i) * c;
    float* o = y.data() + static_cast<int64_t>(i) * c;
    for (int j = 0; j < c; ++j) {
      xh[j] = (row[j] - static_cast<float>(mean)) * is;
      o[j] = gamma.w[j] * xh[j] + beta.w[j];
    }
  }
  return y;
}

Tensor TokenLayerNorm::backward(const Tensor& dy) {
  const int t = dy.dim(0), c = dy.dim(1);
  Tensor dx({t, c});
  for (int i = 0; i < t; ++i) {
    const float* gd = dy.data() + static_cast<int64_t>(i) * c;
    const float* xh = xhat_.data() + static_cast<int64_t>(i) * c;
    float* o = dx.data() + static_cast<int64_t>(i) * c;
    double sum_g = 0, sum_gx = 0;
    for (int j = 0; j < c; ++j) {
      const double gj = static_cast<double>(gd[j]) * gamma.w[j];
      sum_g += gj;
      sum_gx += gj * xh[j];
      gamma.g[j] += gd[j] * xh[j];
      beta.g[j] += gd[j];
    }
    const float k1 = static_cast<float>(sum_g / c), k2 = static_cast<float>(sum_gx / c);
    for (int j = 0; j < c; ++j)
      o[j] = invstd_[i] * (gd[j] * gamma.w[j] - k1 - xh[j] * k2);
  }
  return dx;
}

TransformerBlock::TransformerBlock(const std::string& name, int dim, int heads, int ff_mult)
    : dim_(dim), heads_(heads), head_dim_(dim / heads), ff_(dim * ff_mult),
      ln1_(name + ".ln1", dim), ln2_(name + ".ln2", dim),
      wq_(name + ".wq", dim, dim), wk_(name + ".wk", dim, dim), wv_(name + ".wv", dim, dim),
      wo_(name + ".wo", dim, dim, /*zero_init=*/true),
      ff1_(name + ".ff1", dim, dim * ff_mult),
      ff2_(name + ".ff2", dim * ff_mult, dim, /*zero_init=*/true) {
  require(dim % heads == 0, "TransformerBlock: dim must divide by heads");
}

void TransformerBlock::init(Rng& rng) {
  wq_.init(rng);
  wk_.init(rng);
  wv_.init(rng);
  wo_.init(rng);
  ff1_.init(rng);
  ff2_.init(rng);
}

void TransformerBlock::params(ParamRefs& out) {
  ln1_.params(out);
  wq_.params(out);
  wk_.params(out);
  wv_.params(out);
  wo_.params(out);
  ln2_.params(out);
  ff1_.params(out);
  ff2_.params(out);
}

Tensor TransformerBlock::forward(const Tensor& x, const Tensor& pos, int seq_len) {
  const int t = x.dim(0);
  require(t % seq_len == 0, "TransformerBlock: token count not divisible by seq_len");
  seq_len_ = seq_len;
  const int num_seqs = t / seq_len;
  x_ = x;

  Tensor a = ln1_.forward(x);
  Tensor aqk({t, dim_});
  for (int i = 0; i < t; ++i) {
    const int h = i % seq_len;
    const float* ar = a.data() + static_cast<int64_t>(i) * dim_;
    const float* pr = pos.data() + static_cast<int64_t>(h) * dim_;
    float* o = aqk.data() + static_cast<int64_t>(i) * dim_;
    for (int j = 0; j < dim_; ++j) o[j] = ar[j] + pr[j];
  }
  q_ = wq_.forward(aqk);
  k_ = wk_.forward(aqk);
  v_ = wv_.forward(a);

  const float scale = 1.0f / std::sqrt(static_cast<float>(head_dim_));
  attn_.reset({num_seqs * heads_, seq_len, seq_len});
  Tensor o({t, dim_});
  for (int s = 0; s < num_seqs; ++s) {
    CMapRM Q(q_.data() + static_cast<int64_t>(s) * seq_len * dim_, seq_len, dim_);
    CMapRM K(k_.data() + static_cast<int64_t>(s) * seq_len * dim_, seq_len, dim_);
    CMapRM V(v_.data() + static_cast<int64_t>(s) * seq_len * dim_, seq_len, dim_);
    MapRM O(o.data() + static_cast<int64_t>(s) * seq_len * dim_, seq_len, dim_);
    for (int hd = 0; hd < heads_; ++hd) {
      MapRM P(attn_.data() + (static_cast<int64_t>(s) * heads_ + hd) * seq_len * seq_len,
              seq_len, seq_len);
      P.noalias() = Q.middleCols(hd * head_dim_, head_dim_) *
                    K.middleCols(hd * head_dim_, head_dim_).transpose() * scale;
      for (int r = 0; r < seq_len; ++r) {
        float mx = P.row(r).maxCoeff();
        float sum = 0;
        for (int cidx = 0; cidx < seq_len; ++cidx) {
          P(r, cidx) = std::exp(P(r, cidx) - mx);
          sum += P(r, cidx);
        }
        P.row(r) /= sum;
      }
      O.middleCols(hd * head_dim_, head_dim_).noalias() =
          P * V.middleCols(hd * head_dim_, head_dim_);
    }
  }

  Tensor y = wo_.forward(o);
  x2_.reset({t, dim_});
  for (int64_t i = 0; i < x2_.numel(); ++i) x2_[i] = x[i] + y[i];

  Tensor b = ln2_.forward(x2_);
  ff_pre_ = ff1_.forward(b);
  Tensor g({t, ff_});
  for (int64_t i = 0; i < g.numel(); ++i) g[i] = gelu(ff_pre_[i]);
  Tensor f = ff2_.forward(g);
  Tensor out({t, dim_});
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = x2_[i] + f[i];
  return out;
}

Tensor TransformerBlock::backward(const Tensor& dy, Tensor& dpos) {
  const int t = dy.dim(0);
  const int num_seqs = t / seq_len_;

  // FF branch
  Tensor dg = ff2_.backward(dy);
  Tensor du({t, ff_});
  for (int64_t i = 0; i < du.numel(); ++i) du[i] = dg[i] * gelu_grad(ff_pre_[i]);
  Tensor db = ff1_.backward(du);
  Tensor dx2 = ln2_.backward(db);
  for (int64_t i = 0; i < dx2.numel(); ++i) dx2[i] += dy[i];  // residual

  // attention branch
  Tensor do_ = wo_.backward(dx2);
  Tensor dq({t, dim_}), dk({t, dim_}), dv({t, dim_});
  const float scale = 1.0f / std::sqrt(static_cast<float>(head_dim_));
  for (int s = 0; s < num_seqs; ++s) {
    CMapRM Q(q_.data() + static_cast<int64_t>(s) * seq_len_ * dim_, seq_len_, dim_);
    CMapRM K(k_.data() + static_cast<int64_t>(s) * seq_len_ * dim_, seq_len_, dim_);
    CMapRM V(v_.data() + static_cast<int64_t>(s) * seq_len_ * dim_, seq_len_, dim_);
    CMapRM dO(do_.data() + static_cast<int64_t>(s) * seq_len_ * dim_, seq_len_, dim_);
    MapRM dQ(dq.data() + static_cast<int64_t>(s) * seq_len_ * dim_, seq_len_, dim_);
    MapRM dK(dk.data() + static_cast<int64_t>(s) * seq_len_ * dim_, seq_len_, dim_);
    MapRM dV(dv.data() + static_cast<int64_t>(s) * seq_len_ * dim_, seq_len_, dim_);
    for (int hd = 0; hd < heads_; ++hd) {
      CMapRM P(attn_.data() + (static_cast<int64_t>(s) * heads_ + hd) * seq_len_ * seq_len_,
               seq_len_, seq_len_);
      RowMat dP = dO.middleCols(hd * head_dim_, head_dim_) *
                  V.middleCols(hd * head_dim_, head_dim_).transpose();
      dV.middleCols(hd * head_dim_, head_dim_).noalias() =
          P.transpose() * dO.middleCols(hd * head_dim_, head_dim_);
      RowMat dS(seq_len_, seq_len_);
      for (int r = 0; r < seq_len_; ++r) {
        float dot = 0;
        for (int cidx = 0; cidx < seq_len_; ++cidx) dot += dP(r, cidx) * P(r, cidx);
        dS.row(r) = (dP.row(r).array() - dot) * P.row(r).array();
      }
      dQ.middleCols(hd * head_dim_, head_dim_).noalias() =
          dS * K.middleCols(hd * head_dim_, head_dim_) * scale;
      dK.middleCols(hd * head_dim_, head_dim_).noalias() =
          dS.transpose() * Q.middleCols(hd * head_dim_, head_dim_) * scale;
    }
  }

  Tensor daqk_q = wq_.backward(dq);
  Tensor daqk_k = wk_.backward(dk);
  Tensor da = wv_.backward(dv);
  for (int i = 0; i < t; ++i) {
    const int h = i % seq_len_;
    float* dp = dpos.data() + static_cast<int64_t>(h) * dim_;
    float* dar = da.data() + static_cast<int64_t>(i) * dim_;
    const float* q1 = daqk_q.data() + static_cast<int64_t>(i) * dim_;
    const float* k1 = daqk_k.data() + static_cast<int64_t>(i) * dim_;
    for (int j = 0; j < dim_; ++j) {
      const float d = q1[j] + k1[j];
      dar[j] += d;
      dp[j] += d;
    }
  }
  Tensor dx = ln1_.backward(da);
  for (int64_t i = 0; i < dx.numel(); ++i) dx[i] += dx2[i];  // residual
  return dx;
}

ColumnTransformer::ColumnTransformer(std::string name, int dim, int heads, int layers,
                                     int seq_len, int ff_mult)
    : dim_(dim), seq_len_(seq_len) {
  pos.name = name + ".pos";
  pos.init_shape({seq_len, dim});
  for (int l = 0; l < layers; ++l)
    blocks_.emplace_back(name + ".block" + std::to_string(l), dim, heads, ff_mult);
}

void ColumnTransformer::init(Rng& rng) {
  for (int64_t i = 0; i < pos.w.numel(); ++i) pos.w[i] = 0.02f * rng.normalf();
  for (auto& b : blocks_) b.init(rng);
}

void ColumnTransformer::params(ParamRefs& out) {
  out.push_back(&pos);
  for (auto& b : blocks_) b.params(out);
}

Tensor ColumnTransformer::forward(const Tensor& x) {
  require(x.ndim() == 4 && x.dim(1) == dim_ && x.dim(2) == seq_len_,
          "ColumnTransformer: expected [N, dim, seq_len, W]");
  in_shape_ = x.shape();
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);

  // tokens ordered so each (n, w) column is a contiguous length-h sequence
  Tensor tok({n * w * h, c});
  for (int i = 0; i < n; ++i)
    for (int q = 0; q < w; ++q)
      for (int r = 0; r < h; ++r) {
        float* dst = tok.data() + (static_cast<int64_t>((i * w + q)) * h + r) * c;
        for (int ch = 0; ch < c; ++ch) dst[ch] = x.at(i, ch, r, q);
      }

  for (auto& b : blocks_) tok = b.forward(tok, pos.w, seq_len_);

  Tensor y(in_shape_);
  for (int i = 0; i < n; ++i)
    for (int q = 0; q < w; ++q)
      for (int r = 0; r < h; ++r) {
        const float* src = tok.data() + (static_cast<int64_t>((i * w + q)) * h + r) * c;
        for (int ch = 0; ch < c; ++ch) y.at(i, ch, r, q) = src[ch];
      }
  return y;
}

Tensor ColumnTransformer::backward(const Tensor& dy) {
  const int n = in_shape_[0], c = in_shape_[1], h = in_shape_[2], w = in_shape_[3];
  Tensor dtok({n * w * h, c});
  for (int i = 0; i < n; ++i)
    for (int q = 0; q < w; ++q)
      for (int r = 0; r < h; ++r) {
        float* dst = dtok.data() + (static_cast<int64_t>((i * w + q)) * h + r) * c;
        for (int ch = 0; ch < c; ++ch) dst[ch] = dy.at(i, ch, r, q);
      }

  for (int b = static_cast<int>(blocks_.size()) - 1; b >= 0; --b)
    dtok = blocks_[b].backward(dtok, pos.g);

  Tensor dx(in_shape_);
  for (int i = 0; i < n; ++i)
    for (int q = 0; q < w; ++q)
      for (int r = 0; r < h; ++r) {
        const float* src = dtok.data() + (static_cast<int64_t>((i * w + q)) * h + r) * c;
        for (int ch = 0; ch < c; ++ch) dx.at(i, ch, r, q) = src[ch];
      }
  return dx;
}

}  // namespace bevseg::nn
