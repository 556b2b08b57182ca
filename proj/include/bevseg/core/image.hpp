// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bevseg/core/tensor.hpp"

namespace bevseg {

// 8-bit RGB raster, HWC layout.
struct ImageU8 {
  int height = 0, width = 0;
  std::vector<uint8_t> data;

  ImageU8() = default;
  ImageU8(int h, int w) : height(h), width(w), data(static_cast<size_t>(h) * w * 3, 0) {}
  uint8_t& at(int y, int x, int c) { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  uint8_t at(int y, int x, int c) const {
    return data[(static_cast<size_t>(y) * width + x) * 3 + c];
  }
};

ImageU8 load_png(const std::string& path);
void save_png(const ImageU8& img, const std::string& path);

// [3, H, W] float tensor in [0,1]; the exact inverse of chw_to_image for
// values that started as uint8.
Tensor image_to_chw(const ImageU8& img);
ImageU8 chw_to_image(const Tensor& t);

// Separable bilinear resize with half-pixel centers.
Tensor resize_bilinear_chw(const Tensor& x, int out_h, int out_w);

}  // namespace bevseg
