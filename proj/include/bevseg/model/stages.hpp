// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>

#include "bevseg/config.hpp"
#include "bevseg/eval/metrics.hpp"
#include "bevseg/model/alignment.hpp"
#include "bevseg/nn/checkpoint.hpp"
#include "bevseg/synth/dataset.hpp"

namespace bevseg::model {

struct StageResult {
  nn::Checkpoint ckpt;
  std::vector<double> train_losses;  // per epoch
  std::vector<double> val_losses;
};

// name -> tensor plumbing between nets and checkpoints
void store_named(const NamedTensors& named, std::map<std::string, Tensor>& out);
void load_named(const NamedTensors& named, const std::map<std::string, Tensor>& in);

// Stage I: denoising reconstruction of the (polar, or Cartesian-raster when
// cst is off) ground truth with weighted BCE. Resumable.
StageResult train_stage1(const synth::TrainData& data, const ExperimentConfig& cfg,
                         const nn::Checkpoint* resume = nullptr, std::ostream* log = nullptr);

// Stage II: frozen-autoencoder latent regression from images (MSE against
// encoder outputs on clean targets).
StageResult train_stage2(const synth::TrainData& data, const ExperimentConfig& cfg,
                         const nn::Checkpoint& ae, std::ostream* log = nullptr);

// Stage III: frozen-pipeline decoder fine-tuning with weighted BCE.
StageResult train_stage3(const synth::TrainData& data, const ExperimentConfig& cfg,
                         const nn::Checkpoint& align, std::ostream* log = nullptr);

// End-to-end baseline: pipeline + decoder trained jointly with weighted BCE,
// no autoencoder pretraining.
StageResult train_joint(const synth::TrainData& data, const ExperimentConfig& cfg,
                        std::ostream* log = nullptr);

// Image -> soft Cartesian map for checkpoints tagged align/finetune/joint.
class InferenceEngine {
 public:
  InferenceEngine(const nn::Checkpoint& ckpt, const ExperimentConfig& cfg);
  geometry::BevMap run(const ImageU8& image);

 private:
  ExperimentConfig cfg_;
  AlignmentPipeline pipe_;
  BevDecoder dec_;
  geometry::Warper warper_;
};

geometry::BevMap infer_image(const ImageU8& image, const nn::Checkpoint& ckpt,
                             const ExperimentConfig& cfg);

eval::EvalReport evaluate_split(const synth::TrainData& data, bool val_split,
                                const nn::Checkpoint& ckpt, const ExperimentConfig& cfg,
                                bool use_visibility);

// Pooled fixed-threshold mIoU of noisy reconstruction on one split.
double ae_reconstruction_miou(const synth::TrainData& data, bool val_split,
                              const nn::Checkpoint& ae, const ExperimentConfig& cfg,
                              double threshold, double eta);

// batch assembly from packed targets
Tensor targets_batch(const synth::TrainSamples& s, const std::vector<int>& pick, bool raster,
                     int classes, int rows, int cols);
Tensor images_batch(const synth::TrainSamples& s, const std::vector<int>& pick,
                    const geometry::CameraModel& cam, const PreprocSpec& spec);

}  // namespace bevseg::model
