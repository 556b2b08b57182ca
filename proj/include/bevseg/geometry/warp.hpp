// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "bevseg/geometry/grid.hpp"

namespace bevseg::geometry {

enum class WarpKernel { Nearest, Bilinear };

// Deterministic resampler between Cartesian and polar BEV grids around the
// camera origin. Both directions are plain gathers over precomputed index
// tables, so repeated application is bit-identical and cheap enough to run
// per sample inside training loops.
class Warper {
 public:
  Warper(const GridSpec& grid, const PolarSpec& polar, const CameraModel& cam);

  const GridSpec& grid() const { return grid_; }
  const PolarSpec& polar() const { return polar_; }

  PolarBevMap cart_to_polar(const BevMap& map, WarpKernel k = WarpKernel::Nearest) const;
  BevMap polar_to_cart(const PolarBevMap& map, WarpKernel k = WarpKernel::Nearest) const;

  // 1 where the cell center is strictly inside the FOV wedge and r < max_range.
  const std::vector<uint8_t>& fov_mask() const { return fov_mask_; }

 private:
  GridSpec grid_;
  PolarSpec polar_;
  std::vector<int32_t> c2p_src_;   // per polar cell: cart index or -1
  std::vector<int32_t> p2c_src_;   // per cart cell: polar index or -1
  std::vector<float> c2p_xy_;      // per polar cell: fractional cart coords (bilinear)
  std::vector<float> p2c_rt_;      // per cart cell: fractional polar coords (bilinear)
  std::vector<uint8_t> fov_mask_;
};

// One-shot conveniences (build the tables, warp, discard).
PolarBevMap cart_to_polar(const BevMap& map, const CameraModel& cam, const PolarSpec& pspec,
                          WarpKernel k = WarpKernel::Nearest);
BevMap polar_to_cart(const PolarBevMap& map, const CameraModel& cam, const GridSpec& gspec,
                     WarpKernel k = WarpKernel::Nearest);
std::vector<uint8_t> fov_mask(const CameraModel& cam, const GridSpec& gspec, double max_range);

// Nearest-neighbor resample of one channel plane onto a raster sharing the same
// metric extents (cell-center aligned). Used by the no-polar training variant,
// whose targets live on the network's output raster instead of the metric grid.
void resample_plane_nearest(const float* src, int src_rows, int src_cols, float* dst,
                            int dst_rows, int dst_cols);

}  // namespace bevseg::geometry
