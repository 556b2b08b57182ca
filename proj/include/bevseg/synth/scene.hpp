// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "bevseg/core/image.hpp"
#include "bevseg/core/rng.hpp"
#include "bevseg/geometry/grid.hpp"
#include "bevseg/synth/recipe.hpp"

namespace bevseg::synth {

// One paired training sample: pinhole rendering, Cartesian ground truth and
// the ray-cast visibility mask. Regenerating with the same arguments is
// bit-identical.
struct SceneSample {
  ImageU8 image;
  geometry::BevMap bev;
  std::vector<uint8_t> visibility;  // per grid cell, subset of the FOV mask
  geometry::CameraModel cam;
  uint64_t seed = 0;
};

SceneSample generate_scene(const SceneRecipe& recipe, const geometry::CameraModel& cam,
                           const geometry::GridSpec& gspec, uint64_t seed);

// Flat-shaded albedo per class, shared by the renderer and figure code so
// tests can locate objects in rendered pixels.
std::array<float, 3> class_albedo(const std::string& cls);
std::array<float, 3> ground_albedo();
std::array<float, 3> sky_albedo();

}  // namespace bevseg::synth
