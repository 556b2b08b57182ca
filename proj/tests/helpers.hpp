// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include "bevseg/config.hpp"
#include "bevseg/synth/dataset.hpp"

namespace bevseg::testing {

// Miniature experiment: 50x50 metric grid at 1 m cells, 8x24 polar raster,
// 32x96 images, thin nets. Fast enough for training smokes.
inline ExperimentConfig tiny_config() {
  ExperimentConfig c = ExperimentConfig::desk_default();
  c.grid = geometry::GridSpec::from_ranges(0, 50, -25, 25, 1.0);
  c.polar = {8, 24, 50.0, 1.0};
  c.camera = {1.0, 96, 32, 50, 1.5};
  c.preproc.resize_h = 32;
  c.preproc.resize_w = 96;
  c.preproc.crop_h = 32;
  c.model.latent_channels = 16;
  c.model.feature_channels = 16;
  c.model.encoder_channels = {8, 12, 16};
  c.model.backbone_channels = {8, 12, 16, 16};
  c.model.head_channels = 16;
  c.model.transformer_layers = 1;
  c.model.transformer_heads = 2;
  c.train.batch_size = 4;
  c.train.epochs_stage1 = 2;
  c.train.epochs_stage2 = 2;
  c.train.epochs_stage3 = 1;
  c.train.epochs_joint = 2;
  c.validate();
  return c;
}

inline std::string scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("bevseg_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

inline synth::TrainData tiny_dataset(const ExperimentConfig& cfg, const std::string& dir,
                                     int n = 30, uint64_t seed = 5) {
  synth::build_dataset(cfg.recipe, cfg.camera, cfg.grid, cfg.polar, n, seed, dir);
  return synth::load_training_data(dir, cfg.polar);
}

}  // namespace bevseg::testing
