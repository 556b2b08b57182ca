// SPDX-License-Identifier: Apache-2.0
#include "bevseg/core/image.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/core.hpp>

#include <algorithm>
#include <cmath>

namespace bevseg {

ImageU8 load_png(const std::string& path) {
  cv::Mat m = cv::imread(path, cv::IMREAD_COLOR);
  if (m.empty()) throw IoError("load_png: cannot read " + path);
  ImageU8 img(m.rows, m.cols);
  for (int y = 0; y < m.rows; ++y)
    for (int x = 0; x < m.cols; ++x) {
      const cv::Vec3b px = m.at<cv::Vec3b>(y, x);  // BGR
      img.at(y, x, 0) = px[2];
      img.at(y, x, 1) = px[1];
      img.at(y, x, 2) = px[0];
    }
  return img;
}

void save_png(const ImageU8& img, const std::string& path) {
  cv::Mat m(img.height, img.width, CV_8UC3);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      m.at<cv::Vec3b>(y, x) = cv::Vec3b(img.at(y, x, 2), img.at(y, x, 1), img.at(y, x, 0));
  if (!cv::imwrite(path, m, {cv::IMWRITE_PNG_COMPRESSION, 6}))
    throw IoError("save_png: cannot write " + path);
}

Tensor image_to_chw(const ImageU8& img) {
  Tensor t({3, img.height, img.width});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        t.at(0, c, y, x) = img.at(y, x, c) / 255.0f;
  return t;
}

ImageU8 chw_to_image(const Tensor& t) {
  require(t.ndim() == 3 && t.dim(0) == 3, "chw_to_image: expected [3,H,W]");
  ImageU8 img(t.dim(1), t.dim(2));
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        const float v = std::clamp(t.at(0, c, y, x), 0.0f, 1.0f);
        img.at(y, x, c) = static_cast<uint8_t>(std::lround(v * 255.0f));
      }
  return img;
}

Tensor resize_bilinear_chw(const Tensor& x, int out_h, int out_w) {
  require(x.ndim() == 3, "resize_bilinear_chw: expected [C,H,W]");
  require(out_h >= 1 && out_w >= 1, "resize_bilinear_chw: bad target");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  require(h >= 2 && w >= 2, "resize_bilinear_chw: degenerate input");
  if (out_h == h && out_w == w) return x;
  Tensor y({c, out_h, out_w});
  const double sy = static_cast<double>(h) / out_h;
  const double sx = static_cast<double>(w) / out_w;
  for (int oy = 0; oy < out_h; ++oy) {
    const double fy = std::max(0.0, (oy + 0.5) * sy - 0.5);
    const int y0 = std::min(h - 1, static_cast<int>(fy));
    const int y1 = std::min(h - 1, y0 + 1);
    const float ay = static_cast<float>(fy - y0);
    for (int ox = 0; ox < out_w; ++ox) {
      const double fx = std::max(0.0, (ox + 0.5) * sx - 0.5);
      const int x0 = std::min(w - 1, static_cast<int>(fx));
      const int x1 = std::min(w - 1, x0 + 1);
      const float ax = static_cast<float>(fx - x0);
      for (int ch = 0; ch < c; ++ch) {
        const float tl = x.at(0, ch, y0, x0), tr = x.at(0, ch, y0, x1);
        const float bl = x.at(0, ch, y1, x0), br = x.at(0, ch, y1, x1);
        y.at(0, ch, oy, ox) =
            (tl * (1 - ax) + tr * ax) * (1 - ay) + (bl * (1 - ax) + br * ax) * ay;
      }
    }
  }
  return y;
}

}  // namespace bevseg
