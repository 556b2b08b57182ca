// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "bevseg/core/common.hpp"

namespace bevseg::synth {

// Explicit object placement, mostly for tests and demos.
struct ObjectSpec {
  std::string cls;
  double x = 0, y = 0;
  double heading = 0;  // radians, 0 = facing +x
  double length = 4.5, width = 2.0, height = 1.5;
};

struct Range {
  double lo = 0, hi = 0;
};

// Procedural scene family. Expected object counts are per scene; the road is
// a curved band with walkways on both sides and zebra-style crossings, which
// keeps the layout priors (continuous walkways, filled vehicle rectangles)
// that the reconstruction stage is supposed to learn.
struct SceneRecipe {
  std::vector<std::string> classes = {"drivable", "crossing", "walkway",
                                      "car",      "truck",    "pedestrian"};
  bool road_enabled = true;
  Range road_width{7.0, 11.0};
  double road_heading_max = 0.45;    // |angle| at the origin
  double road_curvature_max = 0.010; // 1/m
  double road_offset_max = 3.0;      // lateral offset at x=0
  Range walkway_width{1.8, 3.0};
  double crossings_mean = 1.2;
  double crossing_length = 3.0;      // extent along the road direction

  double cars_mean = 5.0;
  Range car_length{4.2, 5.2}, car_width{1.8, 2.2}, car_height{1.4, 1.7};
  double trucks_mean = 1.2;
  Range truck_length{6.5, 9.0}, truck_width{2.3, 2.8}, truck_height{2.8, 3.6};
  double pedestrians_mean = 6.0;
  Range ped_size{0.55, 0.85}, ped_height{1.6, 1.9};

  double object_x_min = 6.0, object_x_max = 46.0;
  int max_vehicles = 12;

  std::vector<ObjectSpec> fixed_objects;

  int class_index(const std::string& name) const {
    for (size_t i = 0; i < classes.size(); ++i)
      if (classes[i] == name) return static_cast<int>(i);
    return -1;
  }

  void validate() const {
    require(!classes.empty(), "recipe: empty class set");
    require(cars_mean >= 0 && trucks_mean >= 0 && pedestrians_mean >= 0 && crossings_mean >= 0,
            "recipe: densities must be >= 0");
    require(car_length.lo > 0 && truck_length.lo > 0 && ped_size.lo > 0,
            "recipe: extents must be positive");
  }

  std::string to_json() const;
  static SceneRecipe from_json(const std::string& text);
  uint64_t hash() const { return fnv1a64(to_json()); }
};

}  // namespace bevseg::synth
