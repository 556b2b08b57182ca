// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "bevseg/model/stages.hpp"

namespace bevseg::model {

// Experiment groups keyed by component set, mirroring the ablation table the
// benchmark reproduces: I none, II td, III cst, IV cst+td, V cst+cwt,
// VI cst+td+cwt, VII cst+td+cwt+ft.
AblationFlags group_flags(const std::string& group);

struct GroupResult {
  std::string group;
  uint64_t seed = 0;
  eval::EvalReport report;
  nn::Checkpoint final_ckpt;
  nn::Checkpoint ae_ckpt;     // stage lineage, when task decomposition is on
  nn::Checkpoint align_ckpt;
};

// Runs one group end to end on the given data (training seed override) and
// evaluates the val split.
GroupResult run_ablation_group(const synth::TrainData& data, ExperimentConfig cfg,
                               const std::string& group, uint64_t seed,
                               std::ostream* log = nullptr);

}  // namespace bevseg::model
