// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "bevseg/geometry/warp.hpp"
#include "bevseg/synth/scene.hpp"

using namespace bevseg;
using namespace bevseg::synth;
using geometry::CameraModel;
using geometry::GridSpec;

namespace {

CameraModel desk_cam() {
  CameraModel cam;
  cam.fov = 1.0;
  cam.image_width = 352;
  cam.image_height = 128;
  cam.virtual_height = 198;
  cam.camera_height = 1.5;
  return cam;
}

GridSpec desk_grid() { return GridSpec::from_ranges(0, 50, -25, 25, 0.25); }

bool looks_like(const std::array<float, 3>& albedo, uint8_t r, uint8_t g, uint8_t b) {
  // the renderer scales albedo by texture in [0.85, 1.15) and face shading
  auto near = [](float a, uint8_t v) {
    const float x = v / 255.0f;
    return x > a * 0.70f && x < a * 1.25f + 0.03f;
  };
  return near(albedo[0], r) && near(albedo[1], g) && near(albedo[2], b);
}

SceneRecipe single_car_recipe(double x, double y, double heading = 0.0) {
  SceneRecipe r;
  r.cars_mean = r.trucks_mean = r.pedestrians_mean = 0;
  r.crossings_mean = 0;
  r.fixed_objects.push_back({"car", x, y, heading, 4.5, 2.0, 1.5});
  return r;
}

}  // namespace

TEST_CASE("empty recipe: no objects, visibility equals the fov mask") {
  SceneRecipe r;
  r.cars_mean = r.trucks_mean = r.pedestrians_mean = 0;
  const auto cam = desk_cam();
  const auto gs = desk_grid();
  const SceneSample s = generate_scene(r, cam, gs, 5);

  const int ci_car = r.class_index("car"), ci_truck = r.class_index("truck");
  const int ci_ped = r.class_index("pedestrian");
  for (size_t i = 0; i < s.bev.cells(); ++i) {
    CHECK(s.bev.channel(ci_car)[i] == 0.0f);
    CHECK(s.bev.channel(ci_truck)[i] == 0.0f);
    CHECK(s.bev.channel(ci_ped)[i] == 0.0f);
  }
  const auto mask = geometry::fov_mask(cam, gs, gs.x_max);
  CHECK(s.visibility == mask);
}

TEST_CASE("fixed car of 4.5 x 2.0 m at (10, 0) fills an 18 x 8 cell rectangle") {
  const SceneRecipe r = single_car_recipe(10.0, 0.0);
  const SceneSample s = generate_scene(r, desk_cam(), desk_grid(), 1);
  const int ci = r.class_index("car");
  int64_t count = 0;
  int rmin = 1 << 20, rmax = -1, cmin = 1 << 20, cmax = -1;
  for (int row = 0; row < s.bev.spec.rows; ++row)
    for (int col = 0; col < s.bev.spec.cols; ++col)
      if (s.bev.at(ci, row, col) != 0.0f) {
        ++count;
        rmin = std::min(rmin, row);
        rmax = std::max(rmax, row);
        cmin = std::min(cmin, col);
        cmax = std::max(cmax, col);
      }
  CHECK(count == 18 * 8);
  CHECK(rmax - rmin + 1 == 18);
  CHECK(cmax - cmin + 1 == 8);
}

TEST_CASE("same seed and recipe reproduce the sample bit-identically") {
  SceneRecipe r;
  const SceneSample a = generate_scene(r, desk_cam(), desk_grid(), 42);
  const SceneSample b = generate_scene(r, desk_cam(), desk_grid(), 42);
  CHECK(a.image.data == b.image.data);
  CHECK(a.bev.data == b.bev.data);
  CHECK(a.visibility == b.visibility);
  const SceneSample c = generate_scene(r, desk_cam(), desk_grid(), 43);
  CHECK(a.bev.data != c.bev.data);
}

TEST_CASE("vehicle placement without a road is an infeasible recipe") {
  SceneRecipe r;
  r.road_enabled = false;
  CHECK_THROWS_AS((void)generate_scene(r, desk_cam(), desk_grid(), 1), GenerationError);
  r.cars_mean = r.trucks_mean = 0;
  CHECK_THROWS_AS((void)generate_scene(r, desk_cam(), desk_grid(), 1), GenerationError);
  r.pedestrians_mean = 0;
  const SceneSample s = generate_scene(r, desk_cam(), desk_grid(), 1);  // bare ground is fine
  for (float v : s.bev.data) CHECK(v == 0.0f);
}

TEST_CASE("cells behind an occluder are invisible, the first hit stays visible") {
  const SceneRecipe r = single_car_recipe(15.0, 0.0);
  const auto gs = desk_grid();
  const SceneSample s = generate_scene(r, desk_cam(), gs, 9);
  // straight down the optical axis: in front of the car visible, behind not
  const int col = gs.col_of_y(0.01);
  const int row_front = gs.row_of_x(10.0);
  const int row_first = gs.row_of_x(15.0 - 2.25 + 0.1);
  const int row_behind = gs.row_of_x(22.0);
  const int row_far = gs.row_of_x(40.0);
  CHECK(s.visibility[static_cast<size_t>(row_front) * gs.cols + col] == 1);
  CHECK(s.visibility[static_cast<size_t>(row_first) * gs.cols + col] == 1);
  CHECK(s.visibility[static_cast<size_t>(row_behind) * gs.cols + col] == 0);
  CHECK(s.visibility[static_cast<size_t>(row_far) * gs.cols + col] == 0);

  // occlusion soundness: every invisible in-wedge cell has an object cell
  // strictly before it on its ray
  const auto mask = geometry::fov_mask(s.cam, gs, gs.x_max);
  const int ci = r.class_index("car");
  int invisible = 0;
  for (int row = 0; row < gs.rows; ++row)
    for (int c = 0; c < gs.cols; ++c) {
      const size_t idx = static_cast<size_t>(row) * gs.cols + c;
      if (!mask[idx] || s.visibility[idx]) continue;
      ++invisible;
      const double x = gs.x_of_row(row), y = gs.y_of_col(c);
      const double dist = std::hypot(x, y);
      bool blocked = false;
      for (double t = 0.05; t < dist - 0.3 && !blocked; t += 0.05) {
        const int pr = gs.row_of_x(t * x / dist), pc = gs.col_of_y(t * y / dist);
        if (gs.inside(pr, pc) && (pr != row || pc != c) && s.bev.at(ci, pr, pc) != 0.0f)
          blocked = true;
      }
      CHECK(blocked);
    }
  CHECK(invisible > 0);
}

TEST_CASE("visibility is always a subset of the fov mask") {
  SceneRecipe r;
  const auto gs = desk_grid();
  const SceneSample s = generate_scene(r, desk_cam(), gs, 77);
  const auto mask = geometry::fov_mask(s.cam, gs, gs.x_max);
  for (size_t i = 0; i < mask.size(); ++i)
    if (s.visibility[i]) CHECK(mask[i] == 1);
}

TEST_CASE("rendered car column matches its pinhole azimuth within two columns") {
  const auto cam = desk_cam();
  const double xo = 20.0, yo = 5.0;
  const SceneRecipe r = single_car_recipe(xo, yo);
  const SceneSample s = generate_scene(r, cam, desk_grid(), 3);
  const auto car = class_albedo("car");
  int umin = 1 << 20, umax = -1;
  for (int v = 0; v < s.image.height; ++v)
    for (int u = 0; u < s.image.width; ++u)
      if (looks_like(car, s.image.at(v, u, 0), s.image.at(v, u, 1), s.image.at(v, u, 2))) {
        umin = std::min(umin, u);
        umax = std::max(umax, u);
      }
  REQUIRE(umax >= 0);
  const double u_center = (umin + umax) / 2.0;
  const double expected = cam.principal_x() + cam.focal_px() * (yo / xo);
  CHECK(std::abs(u_center - expected) <= 2.0 + (umax - umin) * 0.15);
}

TEST_CASE("projected object height decreases monotonically with range") {
  const auto cam = desk_cam();
  const auto car = class_albedo("car");
  std::vector<int> heights;
  for (double x : {10.0, 18.0, 27.0, 40.0}) {
    SceneRecipe r = single_car_recipe(x, 0.0);
    r.fixed_objects[0].height = 1.6;
    const SceneSample s = generate_scene(r, cam, desk_grid(), 8);
    int vmin = 1 << 20, vmax = -1;
    for (int v = 0; v < s.image.height; ++v)
      for (int u = 0; u < s.image.width; ++u)
        if (looks_like(car, s.image.at(v, u, 0), s.image.at(v, u, 1), s.image.at(v, u, 2))) {
          vmin = std::min(vmin, v);
          vmax = std::max(vmax, v);
        }
    REQUIRE(vmax >= 0);
    heights.push_back(vmax - vmin + 1);
  }
  for (size_t i = 1; i < heights.size(); ++i) CHECK(heights[i] < heights[i - 1]);
}

TEST_CASE("image dimensions follow the camera model") {
  SceneRecipe r;
  const auto cam = desk_cam();
  const SceneSample s = generate_scene(r, cam, desk_grid(), 11);
  CHECK(s.image.height == cam.image_height);
  CHECK(s.image.width == cam.image_width);
  CHECK(s.cam.fov == cam.fov);
  CHECK(s.seed == 11);
}

TEST_CASE("default recipe produces the expected class frequency ordering") {
  SceneRecipe r;
  const auto gs = desk_grid();
  double f_driv = 0, f_car = 0, f_ped = 0;
  for (uint64_t seed = 0; seed < 12; ++seed) {
    const SceneSample s = generate_scene(r, desk_cam(), gs, seed);
    const size_t cells = s.bev.cells();
    for (size_t i = 0; i < cells; ++i) {
      f_driv += s.bev.channel(r.class_index("drivable"))[i];
      f_car += s.bev.channel(r.class_index("car"))[i];
      f_ped += s.bev.channel(r.class_index("pedestrian"))[i];
    }
  }
  CHECK(f_driv > f_car);
  CHECK(f_car > f_ped);
  CHECK(f_ped > 0);
}
