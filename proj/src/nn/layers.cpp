// SPDX-License-Identifier: Apache-2.0
#include "bevseg/nn/layers.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace bevseg::nn {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<RowMat>;
using CMapRM = Eigen::Map<const RowMat>;

Conv2d::Conv2d(std::string name, int cin, int cout, int ksize, int stride, int pad)
    : cin_(cin), cout_(cout), k_(ksize), stride_(stride), pad_(pad) {
  weight.name = name + ".weight";
  weight.decay = true;
  weight.init_shape({cout, cin * ksize * ksize});
  bias.name = name + ".bias";
  bias.init_shape({cout});
}

void Conv2d::init(Rng& rng) { init_kaiming(weight.w, cin_ * k_ * k_, rng); }

void Conv2d::params(ParamRefs& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

void Conv2d::im2col(const float* x, int h, int w, float* col) const {
  const int oh = out_h(h), ow = out_w(w);
  float* dst = col;
  for (int c = 0; c < cin_; ++c) {
    const float* plane = x + static_cast<int64_t>(c) * h * w;
    for (int ky = 0; ky < k_; ++ky) {
      for (int kx = 0; kx < k_; ++kx) {
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride_ + ky - pad_;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + ow, 0.0f);
            dst += ow;
            continue;
          }
          const float* row = plane + static_cast<int64_t>(iy) * w;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride_ + kx - pad_;
            dst[ox] = (ix >= 0 && ix < w) ? row[ix] : 0.0f;
          }
          dst += ow;
        }
      }
    }
  }
}

void Conv2d::col2im(const float* col, int h, int w, float* dx) const {
  const int oh = out_h(h), ow = out_w(w);
  const float* src = col;
  for (int c = 0; c < cin_; ++c) {
    float* plane = dx + static_cast<int64_t>(c) * h * w;
    for (int ky = 0; ky < k_; ++ky) {
      for (int kx = 0; kx < k_; ++kx) {
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride_ + ky - pad_;
          if (iy < 0 || iy >= h) {
            src += ow;
            continue;
          }
          float* row = plane + static_cast<int64_t>(iy) * w;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride_ + kx - pad_;
            if (ix >= 0 && ix < w) row[ix] += src[ox];
          }
          src += ow;
        }
      }
    }
  }
}

Tensor Conv2d::forward(const Tensor& x) {
  require(x.ndim() == 4 && x.dim(1) == cin_, "Conv2d: input channel mismatch");
  x_ = x;
  const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
  const int oh = out_h(h), ow = out_w(w);
  const int kk = cin_ * k_ * k_;
  const int64_t span = static_cast<int64_t>(oh) * ow;
  Tensor y({n, cout_, oh, ow});
  col_.resize(static_cast<size_t>(kk) * span);
  CMapRM W(weight.w.data(), cout_, kk);
  for (int i = 0; i < n; ++i) {
    im2col(x.data() + static_cast<int64_t>(i) * cin_ * h * w, h, w, col_.data());
    CMapRM col(col_.data(), kk, span);
    MapRM out(y.data() + static_cast<int64_t>(i) * cout_ * span, cout_, span);
    out.noalias() = W * col;
    for (int c = 0; c < cout_; ++c) out.row(c).array() += bias.w[c];
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& dy) {
  const int n = x_.dim(0), h = x_.dim(2), w = x_.dim(3);
  const int oh = out_h(h), ow = out_w(w);
  const int kk = cin_ * k_ * k_;
  const int64_t span = static_cast<int64_t>(oh) * ow;
  require(dy.dim(0) == n && dy.dim(1) == cout_ && dy.dim(2) == oh && dy.dim(3) == ow,
          "Conv2d: dy shape mismatch");
  Tensor dx({n, cin_, h, w});
  MapRM dW(weight.g.data(), cout_, kk);
  std::vector<float> dcol(static_cast<size_t>(kk) * span);
  for (int i = 0; i < n; ++i) {
    im2col(x_.data() + static_cast<int64_t>(i) * cin_ * h * w, h, w, col_.data());
    CMapRM col(col_.data(), kk, span);
    CMapRM g(dy.data() + static_cast<int64_t>(i) * cout_ * span, cout_, span);
    dW.noalias() += g * col.transpose();
    // serial reduction: Eigen redux order varies with buffer alignment
    for (int c = 0; c < cout_; ++c) {
      const float* row = dy.data() + (static_cast<int64_t>(i) * cout_ + c) * span;
      float s = 0;
      for (int64_t j = 0; j < span; ++j) s += row[j];
      bias.g[c] += s;
    }
    MapRM dcol_m(dcol.data(), kk, span);
    CMapRM W(weight.w.data(), cout_, kk);
    dcol_m.noalias() = W.transpose() * g;
    col2im(dcol.data(), h, w, dx.data() + static_cast<int64_t>(i) * cin_ * h * w);
  }
  return dx;
}

BatchNorm2d::BatchNorm2d(std::string name, int channels) : c_(channels), name_(name) {
  gamma.name = name + ".gamma";
  gamma.init_shape({channels});
  gamma.w.fill(1.0f);
  beta.name = name + ".beta";
  beta.init_shape({channels});
  running_mean.reset({channels});
  running_var.reset({channels});
  running_var.fill(1.0f);
}

void BatchNorm2d::params(ParamRefs& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
}

void BatchNorm2d::buffers(std::vector<std::pair<std::string, Tensor*>>& out) {
  out.emplace_back(name_ + ".running_mean", &running_mean);
  out.emplace_back(name_ + ".running_var", &running_var);
}

Tensor BatchNorm2d::forward(const Tensor& x) {
  require(x.ndim() == 4 && x.dim(1) == c_, "BatchNorm2d: channel mismatch");
  const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
  const int64_t plane = static_cast<int64_t>(h) * w;
  const int64_t cnt = static_cast<int64_t>(n) * plane;
  used_batch_stats_ = train_ && !frozen_;
  Tensor y(x.shape());
  xhat_.reset(x.shape());
  invstd_.assign(c_, 0.0f);
  for (int c = 0; c < c_; ++c) {
    double mean, var;
    if (used_batch_stats_) {
      double s = 0, s2 = 0;
      for (int i = 0; i < n; ++i) {
        const float* p = x.data() + (static_cast<int64_t>(i) * c_ + c) * plane;
        for (int64_t j = 0; j < plane; ++j) {
          s += p[j];
          s2 += static_cast<double>(p[j]) * p[j];
        }
      }
      mean = s / cnt;
      var = std::max(0.0, s2 / cnt - mean * mean);
      running_mean[c] = static_cast<float>((1 - momentum_) * running_mean[c] + momentum_ * mean);
      running_var[c] = static_cast<float>((1 - momentum_) * running_var[c] + momentum_ * var);
    } else {
      mean = running_mean[c];
      var = running_var[c];
    }
    const float is = static_cast<float>(1.0 / std::sqrt(var + eps_));
    invstd_[c] = is;
    const float m = static_cast<float>(mean), g = gamma.w[c], b = beta.w[c];
    for (int i = 0; i < n; ++i) {
      const float* p = x.data() + (static_cast<int64_t>(i) * c_ + c) * plane;
      float* xh = xhat_.data() + (static_cast<int64_t>(i) * c_ + c) * plane;
      float* o = y.data() + (static_cast<int64_t>(i) * c_ + c) * plane;
      for (int64_t j = 0; j < plane; ++j) {
        xh[j] = (p[j] - m) * is;
        o[j] = g * xh[j] + b;
      }
    }
  }
  return y;
}

Tensor BatchNorm2d::backward(const Tensor& dy) {
  const int n = dy.dim(0), h = dy.dim(2), w = dy.dim(3);
  const int64_t plane = static_cast<int64_t>(h) * w;
  const int64_t cnt = static_cast<int64_t>(n) * plane;
  Tensor dx(dy.shape());
  for (int c = 0; c < c_; ++c) {
    const float g = gamma.w[c], is = invstd_[c];
    double sum_dy = 0, sum_dy_xhat = 0;
    for (int i = 0; i < n; ++i) {
      const float* gd = dy.data() + (static_cast<int64_t>(i) * c_ + c) * plane;
      const float* xh = xhat_.data() + (static_cast<int64_t>(i) * c_ + c) * plane;
      for (int64_t j = 0; j < plane; ++j) {
        sum_dy += gd[j];
        sum_dy_xhat += static_cast<double>(gd[j]) * xh[j];
      }
    }
    gamma.g[c] += static_cast<float>(sum_dy_xhat);
    beta.g[c] += static_cast<float>(sum_dy);
    if (used_batch_stats_) {
      const float k1 = static_cast<float>(sum_dy / cnt);
      const float k2 = static_cast<float>(sum_dy_xhat / cnt);
      for (int i = 0; i < n; ++i) {
        const float* gd = dy.data() + (static_cast<int64_t>(i) * c_ + c) * plane;
        const float* xh = xhat_.data() + (static_cast<int64_t>(i) * c_ + c) * plane;
        float* o = dx.data() + (static_cast<int64_t>(i) * c_ + c) * plane;
        for (int64_t j = 0; j < plane; ++j) o[j] = g * is * (gd[j] - k1 - xh[j] * k2);
      }
    } else {
      for (int i = 0; i < n; ++i) {
        const float* gd = dy.data() + (static_cast<int64_t>(i) * c_ + c) * plane;
        float* o = dx.data() + (static_cast<int64_t>(i) * c_ + c) * plane;
        for (int64_t j = 0; j < plane; ++j) o[j] = g * is * gd[j];
      }
    }
  }
  return dx;
}

Tensor ReLU::forward(const Tensor& x) {
  Tensor y(x.shape());
  mask_.assign(x.numel(), 0);
  for (int64_t i = 0; i < x.numel(); ++i) {
    if (x[i] > 0) {
      y[i] = x[i];
      mask_[i] = 1;
    }
  }
  return y;
}

Tensor ReLU::backward(const Tensor& dy) {
  Tensor dx(dy.shape());
  for (int64_t i = 0; i < dy.numel(); ++i) dx[i] = mask_[i] ? dy[i] : 0.0f;
  return dx;
}

Tensor Sigmoid::forward(const Tensor& x) {
  Tensor y(x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) y[i] = 1.0f / (1.0f + std::exp(-x[i]));
  y_ = y;
  return y;
}

Tensor Sigmoid::backward(const Tensor& dy) {
  Tensor dx(dy.shape());
  for (int64_t i = 0; i < dy.numel(); ++i) dx[i] = dy[i] * y_[i] * (1.0f - y_[i]);
  return dx;
}

Tensor Upsample2x::forward(const Tensor& x) {
  in_shape_ = x.shape();
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor y({n, c, h * 2, w * 2});
  for (int i = 0; i < n; ++i)
    for (int ch = 0; ch < c; ++ch) {
      const float* src = x.data() + (static_cast<int64_t>(i) * c + ch) * h * w;
      float* dst = y.data() + (static_cast<int64_t>(i) * c + ch) * h * w * 4;
      for (int r = 0; r < h * 2; ++r) {
        const float* sr = src + (r / 2) * w;
        float* dr = dst + static_cast<int64_t>(r) * w * 2;
        for (int q = 0; q < w * 2; ++q) dr[q] = sr[q / 2];
      }
    }
  return y;
}

Tensor Upsample2x::backward(const Tensor& dy) {
  const int n = in_shape_[0], c = in_shape_[1], h = in_shape_[2], w = in_shape_[3];
  Tensor dx({n, c, h, w});
  for (int i = 0; i < n; ++i)
    for (int ch = 0; ch < c; ++ch) {
      float* dst = dx.data() + (static_cast<int64_t>(i) * c + ch) * h * w;
      const float* src = dy.data() + (static_cast<int64_t>(i) * c + ch) * h * w * 4;
      for (int r = 0; r < h * 2; ++r) {
        const float* sr = src + static_cast<int64_t>(r) * w * 2;
        float* dr = dst + (r / 2) * w;
        for (int q = 0; q < w * 2; ++q) dr[q / 2] += sr[q];
      }
    }
  return dx;
}

}  // namespace bevseg::nn
