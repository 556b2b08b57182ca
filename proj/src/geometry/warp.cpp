// SPDX-License-Identifier: Apache-2.0
#include "bevseg/geometry/warp.hpp"

#include <cmath>

namespace bevseg::geometry {

Warper::Warper(const GridSpec& grid, const PolarSpec& polar, const CameraModel& cam)
    : grid_(grid), polar_(polar) {
  grid_.validate();
  polar_.validate();
  cam.validate();
  require(cam.fov == polar_.fov, "Warper: camera fov != polar fov");
  require(grid_.x_max >= polar_.max_range, "Warper: grid forward extent < max_range");

  const int pr = polar_.range_bins, pc = polar_.azimuth_bins;
  c2p_src_.assign(static_cast<size_t>(pr) * pc, -1);
  c2p_xy_.assign(static_cast<size_t>(pr) * pc * 2, 0.0f);
  for (int i = 0; i < pr; ++i) {
    const double r = polar_.r_of_row(i);
    for (int j = 0; j < pc; ++j) {
      const double th = polar_.theta_of_col(j);
      const double x = r * std::cos(th);
      const double y = r * std::sin(th);
      const int gr = grid_.row_of_x(x);
      const int gc = grid_.col_of_y(y);
      const size_t pidx = static_cast<size_t>(i) * pc + j;
      if (grid_.inside(gr, gc)) c2p_src_[pidx] = gr * grid_.cols + gc;
      // fractional cell coords for bilinear taps (cell-center aligned)
      c2p_xy_[pidx * 2 + 0] = static_cast<float>((x - grid_.x_min) / grid_.resolution - 0.5);
      c2p_xy_[pidx * 2 + 1] = static_cast<float>((y - grid_.y_min) / grid_.resolution - 0.5);
    }
  }

  const int gr = grid_.rows, gc = grid_.cols;
  p2c_src_.assign(static_cast<size_t>(gr) * gc, -1);
  p2c_rt_.assign(static_cast<size_t>(gr) * gc * 2, 0.0f);
  fov_mask_.assign(static_cast<size_t>(gr) * gc, 0);
  const double half = polar_.fov / 2;
  for (int r = 0; r < gr; ++r) {
    const double x = grid_.x_of_row(r);
    for (int c = 0; c < gc; ++c) {
      const double y = grid_.y_of_col(c);
      const double rad = std::hypot(x, y);
      const double th = std::atan2(y, x);
      const size_t gidx = static_cast<size_t>(r) * gc + c;
      // strict interior: cells exactly on the wedge boundary stay masked
      if (!(std::abs(th) < half && rad < polar_.max_range)) continue;
      fov_mask_[gidx] = 1;
      const int pi = static_cast<int>(std::floor(rad / polar_.range_step()));
      const int pj = static_cast<int>(std::floor((th + half) / polar_.azimuth_step()));
      if (pi >= 0 && pi < pr && pj >= 0 && pj < pc) p2c_src_[gidx] = pi * pc + pj;
      p2c_rt_[gidx * 2 + 0] = static_cast<float>(rad / polar_.range_step() - 0.5);
      p2c_rt_[gidx * 2 + 1] = static_cast<float>((th + half) / polar_.azimuth_step() - 0.5);
    }
  }
}

namespace {

// clamped bilinear tap over one channel plane
float sample_bilinear(const float* plane, int rows, int cols, float fr, float fc) {
  const int r0 = std::max(0, std::min(rows - 1, static_cast<int>(std::floor(fr))));
  const int c0 = std::max(0, std::min(cols - 1, static_cast<int>(std::floor(fc))));
  const int r1 = std::min(rows - 1, r0 + 1);
  const int c1 = std::min(cols - 1, c0 + 1);
  const float ar = std::min(1.0f, std::max(0.0f, fr - static_cast<float>(r0)));
  const float ac = std::min(1.0f, std::max(0.0f, fc - static_cast<float>(c0)));
  const float top = plane[r0 * cols + c0] * (1 - ac) + plane[r0 * cols + c1] * ac;
  const float bot = plane[r1 * cols + c0] * (1 - ac) + plane[r1 * cols + c1] * ac;
  return top * (1 - ar) + bot * ar;
}

}  // namespace

PolarBevMap Warper::cart_to_polar(const BevMap& map, WarpKernel k) const {
  require(map.spec == grid_, "cart_to_polar: map spec mismatch");
  require(map.num_classes >= 1, "cart_to_polar: empty map");
  PolarBevMap out(polar_, map.num_classes);
  const size_t pcells = out.cells();
  for (int ch = 0; ch < map.num_classes; ++ch) {
    const float* src = map.channel(ch);
    float* dst = out.data.data() + static_cast<size_t>(ch) * pcells;
    if (k == WarpKernel::Nearest) {
      for (size_t i = 0; i < pcells; ++i)
        dst[i] = c2p_src_[i] >= 0 ? src[c2p_src_[i]] : 0.0f;
    } else {
      for (size_t i = 0; i < pcells; ++i) {
        if (c2p_src_[i] < 0) continue;  // out-of-grid pre-image stays 0
        dst[i] = sample_bilinear(src, grid_.rows, grid_.cols, c2p_xy_[i * 2], c2p_xy_[i * 2 + 1]);
      }
    }
  }
  return out;
}

BevMap Warper::polar_to_cart(const PolarBevMap& map, WarpKernel k) const {
  require(map.spec == polar_, "polar_to_cart: map spec mismatch");
  require(map.num_classes >= 1, "polar_to_cart: empty map");
  BevMap out(grid_, map.num_classes);
  const size_t gcells = out.cells();
  const size_t pcells = map.cells();
  for (int ch = 0; ch < map.num_classes; ++ch) {
    const float* src = map.data.data() + static_cast<size_t>(ch) * pcells;
    float* dst = out.channel(ch);
    if (k == WarpKernel::Nearest) {
      for (size_t i = 0; i < gcells; ++i)
        dst[i] = p2c_src_[i] >= 0 ? src[p2c_src_[i]] : 0.0f;
    } else {
      for (size_t i = 0; i < gcells; ++i) {
        if (!fov_mask_[i]) continue;  // outside the wedge is identically 0
        dst[i] = sample_bilinear(src, polar_.range_bins, polar_.azimuth_bins, p2c_rt_[i * 2],
                                 p2c_rt_[i * 2 + 1]);
      }
    }
  }
  return out;
}

PolarBevMap cart_to_polar(const BevMap& map, const CameraModel& cam, const PolarSpec& pspec,
                          WarpKernel k) {
  return Warper(map.spec, pspec, cam).cart_to_polar(map, k);
}

BevMap polar_to_cart(const PolarBevMap& map, const CameraModel& cam, const GridSpec& gspec,
                     WarpKernel k) {
  return Warper(gspec, map.spec, cam).polar_to_cart(map, k);
}

std::vector<uint8_t> fov_mask(const CameraModel& cam, const GridSpec& gspec, double max_range) {
  PolarSpec p;
  p.fov = cam.fov;
  p.max_range = max_range;
  p.range_bins = 1;
  p.azimuth_bins = 1;
  return Warper(gspec, p, cam).fov_mask();
}

void resample_plane_nearest(const float* src, int src_rows, int src_cols, float* dst,
                            int dst_rows, int dst_cols) {
  require(src_rows > 0 && src_cols > 0 && dst_rows > 0 && dst_cols > 0,
          "resample_plane_nearest: bad dims");
  for (int r = 0; r < dst_rows; ++r) {
    const double fr = (r + 0.5) * src_rows / static_cast<double>(dst_rows);
    const int sr = std::min(src_rows - 1, static_cast<int>(fr));
    for (int c = 0; c < dst_cols; ++c) {
      const double fc = (c + 0.5) * src_cols / static_cast<double>(dst_cols);
      const int sc = std::min(src_cols - 1, static_cast<int>(fc));
      dst[r * dst_cols + c] = src[sr * src_cols + sc];
    }
  }
}

}  // namespace bevseg::geometry
