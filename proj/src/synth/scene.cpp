// SPDX-License-Identifier: Apache-2.0
#include "bevseg/synth/scene.hpp"

#include <algorithm>
#include <cmath>

#include "bevseg/geometry/warp.hpp"

namespace bevseg::synth {

using geometry::BevMap;
using geometry::CameraModel;
using geometry::GridSpec;

namespace {

struct PlacedObject {
  int cls = -1;
  double x = 0, y = 0, heading = 0, length = 0, width = 0, height = 0;
};

int poisson(Rng& rng, double mean) {
  if (mean <= 0) return 0;
  const double limit = std::exp(-mean);
  int k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= rng.uniform01();
  } while (p > limit);
  return k - 1;
}

double draw(Rng& rng, const Range& r) { return rng.uniform(r.lo, r.hi); }

// world-anchored texture in [0.85, 1.15); keys on the BEV cell so image noise
// stays attached to geometry instead of pixels
float texture_at(uint64_t tex_seed, int cr, int cc) {
  const uint64_t h = Rng::mix(tex_seed, (static_cast<uint64_t>(static_cast<uint32_t>(cr)) << 32) |
                                            static_cast<uint32_t>(cc));
  return 0.85f + 0.30f * static_cast<float>(h >> 11) * 0x1.0p-53f;
}

float pixel_noise(uint64_t tex_seed, int u, int v) {
  const uint64_t h = Rng::mix(tex_seed ^ 0x5bf03635u,
                              (static_cast<uint64_t>(static_cast<uint32_t>(u)) << 32) |
                                  static_cast<uint32_t>(v));
  return (static_cast<float>(h >> 11) * 0x1.0p-53f - 0.5f) * 0.04f;
}

struct RoadModel {
  bool enabled = false;
  double offset = 0, tan_heading = 0, curvature = 0, width = 8, walkway = 2;
  std::vector<double> crossings;  // x positions
  double center_y(double x) const { return offset + tan_heading * x + 0.5 * curvature * x * x; }
  double tangent(double x) const { return std::atan(tan_heading + curvature * x); }
};

}  // namespace

std::array<float, 3> class_albedo(const std::string& cls) {
  if (cls == "drivable") return {0.30f, 0.30f, 0.34f};
  if (cls == "crossing") return {0.86f, 0.86f, 0.88f};
  if (cls == "walkway") return {0.56f, 0.50f, 0.44f};
  if (cls == "car") return {0.75f, 0.14f, 0.12f};
  if (cls == "truck") return {0.14f, 0.30f, 0.76f};
  if (cls == "pedestrian") return {0.90f, 0.76f, 0.10f};
  return {0.5f, 0.5f, 0.5f};
}

std::array<float, 3> ground_albedo() { return {0.34f, 0.40f, 0.30f}; }
std::array<float, 3> sky_albedo() { return {0.58f, 0.72f, 0.92f}; }

SceneSample generate_scene(const SceneRecipe& recipe, const CameraModel& cam,
                           const GridSpec& gspec, uint64_t seed) {
  recipe.validate();
  cam.validate();
  gspec.validate();
  if (!recipe.road_enabled && (recipe.cars_mean > 0 || recipe.trucks_mean > 0))
    throw GenerationError("recipe: vehicles require a drivable band");
  if (!recipe.road_enabled && recipe.pedestrians_mean > 0)
    throw GenerationError("recipe: pedestrians require walkways");

  const Rng root(seed);
  Rng layout = root.derive(0x10);
  Rng objects = root.derive(0x20);
  const uint64_t tex_seed = Rng::mix(seed, 0x30);

  const int ci_drv = recipe.class_index("drivable");
  const int ci_cross = recipe.class_index("crossing");
  const int ci_walk = recipe.class_index("walkway");
  const int ci_car = recipe.class_index("car");
  const int ci_truck = recipe.class_index("truck");
  const int ci_ped = recipe.class_index("pedestrian");

  RoadModel road;
  if (recipe.road_enabled) {
    road.enabled = true;
    road.width = draw(layout, recipe.road_width);
    road.tan_heading = std::tan(layout.uniform(-recipe.road_heading_max, recipe.road_heading_max));
    road.curvature = layout.uniform(-recipe.road_curvature_max, recipe.road_curvature_max);
    road.offset = layout.uniform(-recipe.road_offset_max, recipe.road_offset_max);
    road.walkway = draw(layout, recipe.walkway_width);
    const int ncross = poisson(layout, recipe.crossings_mean);
    for (int i = 0; i < ncross; ++i)
      road.crossings.push_back(layout.uniform(recipe.object_x_min + 2, recipe.object_x_max - 2));
  }

  std::vector<PlacedObject> placed;
  for (const auto& f : recipe.fixed_objects) {
    const int idx = recipe.class_index(f.cls);
    require(idx >= 0, "recipe: fixed object class not in class set: " + f.cls);
    placed.push_back({idx, f.x, f.y, f.heading, f.length, f.width, f.height});
  }

  auto overlaps = [&](double x, double y, double l, double w) {
    for (const auto& o : placed) {
      const double r1 = std::hypot(l, w) / 2, r2 = std::hypot(o.length, o.width) / 2;
      if (std::hypot(x - o.x, y - o.y) < r1 + r2) return true;
    }
    return false;
  };

  auto place_vehicles = [&](double mean, int cls, const Range& lr, const Range& wr,
                            const Range& hr) {
    const int n = std::min(poisson(objects, mean), recipe.max_vehicles);
    for (int i = 0; i < n; ++i) {
      for (int attempt = 0; attempt < 20; ++attempt) {
        const double len = draw(objects, lr), wid = draw(objects, wr), hgt = draw(objects, hr);
        const double x = objects.uniform(recipe.object_x_min, recipe.object_x_max);
        const double margin = road.width / 2 - wid / 2 - 0.2;
        if (margin <= 0) break;
        const double y = road.center_y(x) + objects.uniform(-margin, margin);
        const double heading = road.tangent(x) + objects.uniform(-0.08, 0.08);
        if (overlaps(x, y, len, wid)) continue;
        placed.push_back({cls, x, y, heading, len, wid, hgt});
        break;
      }
    }
  };
  if (road.enabled && ci_car >= 0)
    place_vehicles(recipe.cars_mean, ci_car, recipe.car_length, recipe.car_width,
                   recipe.car_height);
  if (road.enabled && ci_truck >= 0)
    place_vehicles(recipe.trucks_mean, ci_truck, recipe.truck_length, recipe.truck_width,
                   recipe.truck_height);
  if (road.enabled && ci_ped >= 0) {
    const int n = poisson(objects, recipe.pedestrians_mean);
    for (int i = 0; i < n; ++i) {
      const double size = draw(objects, recipe.ped_size);
      const double hgt = draw(objects, recipe.ped_height);
      const bool on_crossing = !road.crossings.empty() && objects.uniform01() < 0.35;
      double x, y;
      if (on_crossing) {
        const auto cx = road.crossings[objects.uniform_int(road.crossings.size())];
        x = cx + objects.uniform(-recipe.crossing_length / 2, recipe.crossing_length / 2);
        y = road.center_y(x) + objects.uniform(-road.width / 2 + 0.4, road.width / 2 - 0.4);
      } else {
        x = objects.uniform(recipe.object_x_min, recipe.object_x_max);
        const double side = objects.uniform01() < 0.5 ? -1.0 : 1.0;
        const double off = objects.uniform(0.2, std::max(0.25, road.walkway - size));
        y = road.center_y(x) + side * (road.width / 2 + off + size / 2);
      }
      const double heading = objects.uniform(0, 2 * M_PI);
      placed.push_back({ci_ped, x, y, heading, size, size, hgt});
    }
  }

  SceneSample s;
  s.cam = cam;
  s.seed = seed;
  s.bev = BevMap(gspec, static_cast<int>(recipe.classes.size()));

  // ground truth raster + render stencils
  const int R = gspec.rows, C = gspec.cols;
  std::vector<float> height(static_cast<size_t>(R) * C, 0.0f);
  std::vector<int8_t> obj_cls(static_cast<size_t>(R) * C, -1);
  std::vector<int8_t> gnd_cls(static_cast<size_t>(R) * C, -1);
  for (int r = 0; r < R; ++r) {
    const double x = gspec.x_of_row(r);
    for (int c = 0; c < C; ++c) {
      const double y = gspec.y_of_col(c);
      const size_t idx = static_cast<size_t>(r) * C + c;
      if (road.enabled) {
        const double d = std::abs(y - road.center_y(x));
        if (d <= road.width / 2) {
          if (ci_drv >= 0) s.bev.at(ci_drv, r, c) = 1.0f;
          gnd_cls[idx] = static_cast<int8_t>(ci_drv);
          for (double cxp : road.crossings) {
            if (std::abs(x - cxp) <= recipe.crossing_length / 2) {
              if (ci_cross >= 0) s.bev.at(ci_cross, r, c) = 1.0f;
              gnd_cls[idx] = static_cast<int8_t>(ci_cross);
              break;
            }
          }
        } else if (d <= road.width / 2 + road.walkway) {
          if (ci_walk >= 0) {
            s.bev.at(ci_walk, r, c) = 1.0f;
            gnd_cls[idx] = static_cast<int8_t>(ci_walk);
          }
        }
      }
    }
  }
  for (const auto& o : placed) {
    const double ch = std::cos(o.heading), sh = std::sin(o.heading);
    const double rad = std::hypot(o.length, o.width) / 2 + gspec.resolution;
    const int r0 = std::max(0, gspec.row_of_x(o.x - rad)), r1 = std::min(R - 1, gspec.row_of_x(o.x + rad));
    const int c0 = std::max(0, gspec.col_of_y(o.y - rad)), c1 = std::min(C - 1, gspec.col_of_y(o.y + rad));
    for (int r = r0; r <= r1; ++r) {
      const double x = gspec.x_of_row(r);
      for (int c = c0; c <= c1; ++c) {
        const double y = gspec.y_of_col(c);
        const double dx = x - o.x, dy = y - o.y;
        const double lon = dx * ch + dy * sh, lat = -dx * sh + dy * ch;
        if (std::abs(lon) <= o.length / 2 && std::abs(lat) <= o.width / 2) {
          s.bev.at(o.cls, r, c) = 1.0f;
          const size_t idx = static_cast<size_t>(r) * C + c;
          if (o.height > height[idx]) {
            height[idx] = static_cast<float>(o.height);
            obj_cls[idx] = static_cast<int8_t>(o.cls);
          }
        }
      }
    }
  }

  // visibility: march each in-wedge cell's ray from the camera; the first
  // object cell on the way blocks everything behind it
  geometry::PolarSpec wedge;
  wedge.fov = cam.fov;
  wedge.max_range = gspec.x_max;
  wedge.range_bins = 1;
  wedge.azimuth_bins = 1;
  const std::vector<uint8_t> fmask = geometry::Warper(gspec, wedge, cam).fov_mask();
  s.visibility.assign(static_cast<size_t>(R) * C, 0);
  const double step = gspec.resolution * 0.5;
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < C; ++c) {
      const size_t idx = static_cast<size_t>(r) * C + c;
      if (!fmask[idx]) continue;
      const double x = gspec.x_of_row(r), y = gspec.y_of_col(c);
      const double dist = std::hypot(x, y);
      const double ux = x / dist, uy = y / dist;
      bool blocked = false;
      for (double t = step * 0.5; t < dist; t += step) {
        const int pr = gspec.row_of_x(t * ux), pc = gspec.col_of_y(t * uy);
        if (!gspec.inside(pr, pc)) continue;
        if (pr == r && pc == c) break;  // reached the cell itself
        if (height[static_cast<size_t>(pr) * C + pc] > 0.0f) {
          blocked = true;
          break;
        }
      }
      s.visibility[idx] = blocked ? 0 : 1;
    }
  }

  // pinhole rendering: per-column ground/heightfield march, near to far
  const int W = cam.image_width, H = cam.image_height;
  s.image = ImageU8(H, W);
  const double f = cam.focal_px();
  const double cx = cam.principal_x();
  const double cy_virtual = cam.virtual_height / 2.0;
  const int v_off = cam.virtual_height - H;
  const double hcam = cam.camera_height;
  const int horizon_local = std::max(
      0, static_cast<int>(std::ceil(cy_virtual - v_off - 0.5)));
  std::vector<float> colbuf(static_cast<size_t>(H) * 3);

  for (int u = 0; u < W; ++u) {
    const double tan_th = ((u + 0.5) - cx) / f;
    int fill_from = H;  // rows [fill_from, H) already colored
    const double v_bottom = v_off + H - 0.5;
    double X = std::max(0.25, 0.8 * f * hcam / std::max(1.0, v_bottom - cy_virtual));
    const double march_step = gspec.resolution * 0.5;
    bool exited = false;
    while (fill_from > 0) {
      const double y = X * tan_th;
      const int pr = gspec.row_of_x(X), pc = gspec.col_of_y(y);
      if (!gspec.inside(pr, pc)) {
        exited = true;
        break;
      }
      const size_t idx = static_cast<size_t>(pr) * C + pc;
      const float z = height[idx];
      std::array<float, 3> alb;
      if (z > 0.0f) {
        alb = class_albedo(recipe.classes[obj_cls[idx]]);
        alb = {alb[0] * 0.88f, alb[1] * 0.88f, alb[2] * 0.88f};  // face shading
      } else if (gnd_cls[idx] >= 0) {
        alb = class_albedo(recipe.classes[gnd_cls[idx]]);
      } else {
        alb = ground_albedo();
      }
      const float tex = texture_at(tex_seed, pr, pc);
      const double v_top = cy_virtual + f * (hcam - z) / X;
      int v_start = static_cast<int>(std::ceil(v_top - v_off - 0.5));
      if (v_start < 0) v_start = 0;
      for (int v = v_start; v < fill_from; ++v) {
        colbuf[v * 3 + 0] = alb[0] * tex;
        colbuf[v * 3 + 1] = alb[1] * tex;
        colbuf[v * 3 + 2] = alb[2] * tex;
      }
      if (v_start < fill_from) fill_from = v_start;
      X += march_step;
    }
    if (exited && fill_from > horizon_local) {
      // ground beyond the mapped region, up to the horizon
      const auto g = ground_albedo();
      for (int v = horizon_local; v < fill_from; ++v) {
        const float fade = 0.9f + 0.1f * static_cast<float>(v - horizon_local) /
                                      std::max(1, fill_from - horizon_local);
        colbuf[v * 3 + 0] = g[0] * fade;
        colbuf[v * 3 + 1] = g[1] * fade;
        colbuf[v * 3 + 2] = g[2] * fade;
      }
      fill_from = horizon_local;
    }
    const auto sky = sky_albedo();
    for (int v = 0; v < fill_from; ++v) {
      const float fade = 1.0f - 0.25f * static_cast<float>(v) / H;
      colbuf[v * 3 + 0] = sky[0] * fade;
      colbuf[v * 3 + 1] = sky[1] * fade;
      colbuf[v * 3 + 2] = sky[2] * fade;
    }
    for (int v = 0; v < H; ++v)
      for (int ch = 0; ch < 3; ++ch) {
        const float val = colbuf[v * 3 + ch] + pixel_noise(tex_seed, u, v);
        s.image.at(v, u, ch) =
            static_cast<uint8_t>(std::lround(std::clamp(val, 0.0f, 1.0f) * 255.0f));
      }
  }

  return s;
}

}  // namespace bevseg::synth
