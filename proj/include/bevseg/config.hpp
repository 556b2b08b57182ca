// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>

#include "bevseg/eval/metrics.hpp"
#include "bevseg/geometry/grid.hpp"
#include "bevseg/model/alignment.hpp"
#include "bevseg/synth/recipe.hpp"

namespace bevseg {

struct ModelConfig {
  int latent_channels = 64;
  int feature_channels = 64;
  std::array<int, 3> encoder_channels{32, 48, 64};
  std::array<int, 4> backbone_channels{32, 48, 64, 64};
  int head_channels = 64;
  int transformer_layers = 2;
  int transformer_heads = 4;
  int transformer_ff_mult = 4;
  double eta = 0.5;
  double weight_clip_lo = 0.1, weight_clip_hi = 1000.0;
  std::string prediction_warp = "nearest";  // or "bilinear", soft maps only
};

struct TrainConfig {
  double lr_stage1 = 5e-4;
  double lr_stage2 = 2e-5;
  double lr_stage3 = 2e-4;
  double lr_joint = 2e-4;
  double weight_decay = 0.01;
  double warmup_frac = 0.05;
  bool cosine = true;
  int epochs_stage1 = 50, epochs_stage2 = 50, epochs_stage3 = 50, epochs_joint = 50;
  int batch_size = 16;
  uint64_t seed = 1;
  std::string optimizer = "lion";  // or "adamw"
};

// Table-4 style component switches. cst: polar targets; td: two-stage
// training; cwt: column-wise transformer; ft: decoder fine-tuning.
struct AblationFlags {
  bool cst = true, td = true, cwt = true, ft = true;
};

struct ExperimentConfig {
  int schema_version = 1;
  std::string profile = "desk";
  geometry::GridSpec grid;
  geometry::PolarSpec polar;
  geometry::CameraModel camera;
  synth::SceneRecipe recipe;
  ModelConfig model;
  model::PreprocSpec preproc;
  TrainConfig train;
  AblationFlags ablate;
  eval::EvalConfig eval;

  static ExperimentConfig desk_default();
  static ExperimentConfig paper_scale();

  void validate() const;

  int num_classes() const { return static_cast<int>(recipe.classes.size()); }
  int latent_rows() const { return polar.range_bins / 8; }
  int latent_cols() const { return polar.azimuth_bins / 8; }
  model::PipelineShape pipeline_shape() const;

  std::string to_json(bool pretty = false) const;
  // strict: unknown keys anywhere are an error
  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig load(const std::string& path);
  void save(const std::string& path) const;

  uint64_t hash() const { return fnv1a64(to_json(false)); }
};

}  // namespace bevseg
