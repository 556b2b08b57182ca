// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bevseg/geometry/warp.hpp"
#include "bevseg/synth/scene.hpp"

namespace bevseg::synth {

// Bit packing for {0,1} planes (cart maps, visibility, polar targets).
std::vector<uint8_t> pack_bits(const float* plane, size_t cells);
inline bool get_bit(const std::vector<uint8_t>& bits, size_t base_bytes, size_t idx) {
  return (bits[base_bytes + (idx >> 3)] >> (idx & 7)) & 1;
}
inline size_t plane_stride_bytes(size_t cells) { return (cells + 7) / 8; }

struct DatasetManifest {
  int schema_version = 1;
  std::string recipe_json;
  std::string recipe_hash;  // hex
  uint64_t base_seed = 0;
  int n = 0;
  std::vector<std::string> class_names;
  std::vector<int> train_ids, val_ids;
  std::vector<double> class_freq_cart;   // mean occupancy over the train split
  std::vector<double> class_freq_polar;  // same, measured in polar space
  geometry::GridSpec grid;
  geometry::PolarSpec polar;
  geometry::CameraModel camera;

  std::string to_json() const;
  static DatasetManifest from_json(const std::string& text);

  // fingerprint of everything that determines the generated bytes
  uint64_t build_hash() const;
};

struct BuildResult {
  DatasetManifest manifest;
  bool up_to_date = false;  // an identical dataset was already present
};

// Writes n samples under root/{train,val} with a deterministic 90/10 split
// (id % 10 == 9 -> val) and a manifest. Rebuilding with identical arguments
// is a no-op; a manifest with a different build hash is a hard error.
BuildResult build_dataset(const SceneRecipe& recipe, const geometry::CameraModel& cam,
                          const geometry::GridSpec& gspec, const geometry::PolarSpec& pspec,
                          int n, uint64_t seed, const std::string& root);

DatasetManifest load_manifest(const std::string& root);
SceneSample load_sample(const std::string& root, const DatasetManifest& m, int id);

// Whole split resident in memory for training: packed Cartesian ground truth,
// visibility, derived polar / Cartesian-raster targets, and the raw images.
struct TrainSamples {
  std::vector<int> ids;
  std::vector<std::vector<uint8_t>> images;      // HWC uint8
  std::vector<std::vector<uint8_t>> cart_bits;   // K packed planes
  std::vector<std::vector<uint8_t>> vis_bits;    // 1 packed plane
  std::vector<std::vector<uint8_t>> polar_bits;  // K packed planes (warped gt)
  std::vector<std::vector<uint8_t>> raster_bits; // K packed planes (cart on net raster)
};

struct TrainData {
  DatasetManifest manifest;
  geometry::GridSpec grid;
  geometry::PolarSpec polar;
  geometry::CameraModel camera;
  TrainSamples train, val;
  std::vector<double> polar_freq;   // recomputed on the loaded train split
  std::vector<double> raster_freq;  // same, on the Cartesian-raster targets

  int num_classes() const { return static_cast<int>(manifest.class_names.size()); }
};

// polar spec may differ from the build-time one; targets are re-warped here.
TrainData load_training_data(const std::string& root, const geometry::PolarSpec& pspec);

}  // namespace bevseg::synth
