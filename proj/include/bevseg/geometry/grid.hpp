// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "bevseg/core/common.hpp"

namespace bevseg::geometry {

// Conventions used throughout:
//   world frame: camera at the origin, x forward (meters), y lateral-right.
//   azimuth theta = atan2(y, x), increasing left-to-right together with
//   image columns. BEV grids are indexed (row = x bin, col = y bin).

struct GridSpec {
  double x_min = 0.0, x_max = 50.0;   // forward extent
  double y_min = -25.0, y_max = 25.0; // lateral extent
  double resolution = 0.25;           // meters per cell
  int rows = 200, cols = 200;

  static GridSpec from_ranges(double x0, double x1, double y0, double y1, double res) {
    GridSpec g;
    g.x_min = x0; g.x_max = x1; g.y_min = y0; g.y_max = y1; g.resolution = res;
    g.rows = static_cast<int>(std::llround((x1 - x0) / res));
    g.cols = static_cast<int>(std::llround((y1 - y0) / res));
    g.validate();
    return g;
  }

  void validate() const {
    require(resolution > 0, "GridSpec: resolution must be > 0");
    require(rows > 0 && cols > 0, "GridSpec: dims must be positive");
    require(std::abs((x_max - x_min) / resolution - rows) < 1e-6,
            "GridSpec: x extent does not divide into rows");
    require(std::abs((y_max - y_min) / resolution - cols) < 1e-6,
            "GridSpec: y extent does not divide into cols");
  }

  double x_of_row(int r) const { return x_min + (r + 0.5) * resolution; }
  double y_of_col(int c) const { return y_min + (c + 0.5) * resolution; }
  // floor-bin lookup; may fall outside [0, rows/cols)
  int row_of_x(double x) const { return static_cast<int>(std::floor((x - x_min) / resolution)); }
  int col_of_y(double y) const { return static_cast<int>(std::floor((y - y_min) / resolution)); }
  bool inside(int r, int c) const { return r >= 0 && r < rows && c >= 0 && c < cols; }

  bool operator==(const GridSpec& o) const {
    return x_min == o.x_min && x_max == o.x_max && y_min == o.y_min && y_max == o.y_max &&
           resolution == o.resolution && rows == o.rows && cols == o.cols;
  }
};

struct PolarSpec {
  int range_bins = 64;
  int azimuth_bins = 176;
  double max_range = 50.0;
  double fov = 1.0;  // radians, horizontal

  void validate() const {
    require(range_bins > 0 && azimuth_bins > 0, "PolarSpec: bins must be positive");
    require(max_range > 0, "PolarSpec: max_range must be > 0");
    require(fov > 0 && fov < M_PI, "PolarSpec: fov must be in (0, pi)");
  }

  double range_step() const { return max_range / range_bins; }
  double azimuth_step() const { return fov / azimuth_bins; }
  double r_of_row(int i) const { return (i + 0.5) * range_step(); }
  double theta_of_col(int j) const { return -fov / 2 + (j + 0.5) * azimuth_step(); }

  bool operator==(const PolarSpec& o) const {
    return range_bins == o.range_bins && azimuth_bins == o.azimuth_bins &&
           max_range == o.max_range && fov == o.fov;
  }
};

struct CameraModel {
  double fov = 1.0;        // horizontal, radians
  int image_width = 352;   // emitted (cropped) size
  int image_height = 128;
  int virtual_height = 198;  // pre-crop height; principal row sits at its center
  double camera_height = 1.5;

  void validate() const {
    require(fov > 0 && fov < M_PI, "CameraModel: fov must be in (0, pi)");
    require(image_width > 0 && image_height > 0, "CameraModel: dims must be positive");
    require(virtual_height >= image_height, "CameraModel: crop taller than virtual image");
    require(camera_height > 0, "CameraModel: camera_height must be > 0");
  }

  double focal_px() const { return (image_width / 2.0) / std::tan(fov / 2.0); }
  double principal_x() const { return image_width / 2.0; }
  // principal row in emitted-image coordinates (may be negative after cropping)
  double principal_y() const { return virtual_height / 2.0 - (virtual_height - image_height); }
};

// K-channel occupancy grid over a GridSpec. Ground truth holds {0,1};
// model outputs hold [0,1].
struct BevMap {
  GridSpec spec;
  int num_classes = 0;
  std::vector<float> data;  // [K][rows][cols]

  BevMap() = default;
  BevMap(const GridSpec& g, int k) : spec(g), num_classes(k) {
    data.assign(static_cast<size_t>(k) * g.rows * g.cols, 0.0f);
  }
  float& at(int k, int r, int c) {
    return data[(static_cast<size_t>(k) * spec.rows + r) * spec.cols + c];
  }
  float at(int k, int r, int c) const {
    return data[(static_cast<size_t>(k) * spec.rows + r) * spec.cols + c];
  }
  float* channel(int k) { return data.data() + static_cast<size_t>(k) * spec.rows * spec.cols; }
  const float* channel(int k) const {
    return data.data() + static_cast<size_t>(k) * spec.rows * spec.cols;
  }
  size_t cells() const { return static_cast<size_t>(spec.rows) * spec.cols; }
};

struct PolarBevMap {
  PolarSpec spec;
  int num_classes = 0;
  std::vector<float> data;  // [K][range_bins][azimuth_bins]

  PolarBevMap() = default;
  PolarBevMap(const PolarSpec& p, int k) : spec(p), num_classes(k) {
    data.assign(static_cast<size_t>(k) * p.range_bins * p.azimuth_bins, 0.0f);
  }
  float& at(int k, int i, int j) {
    return data[(static_cast<size_t>(k) * spec.range_bins + i) * spec.azimuth_bins + j];
  }
  float at(int k, int i, int j) const {
    return data[(static_cast<size_t>(k) * spec.range_bins + i) * spec.azimuth_bins + j];
  }
  size_t cells() const { return static_cast<size_t>(spec.range_bins) * spec.azimuth_bins; }
};

inline bool is_binary(const std::vector<float>& v) {
  for (float x : v)
    if (x != 0.0f && x != 1.0f) return false;
  return true;
}

}  // namespace bevseg::geometry
