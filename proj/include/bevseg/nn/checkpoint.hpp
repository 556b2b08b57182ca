// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>

#include "bevseg/core/tensor.hpp"

namespace bevseg::nn {

// Stage tags form a lineage: ae -> align -> finetune. "joint" marks the
// end-to-end baseline trained without task decomposition.
inline constexpr const char* kStageAe = "ae";
inline constexpr const char* kStageAlign = "align";
inline constexpr const char* kStageFinetune = "finetune";
inline constexpr const char* kStageJoint = "joint";

// Versioned parameter container for one training stage: named tensors
// (parameters and normalization buffers), optimizer state, RNG state, and a
// free-form JSON metadata blob. Little-endian on-disk layout.
struct Checkpoint {
  uint32_t version = 1;
  std::string stage;
  uint64_t config_hash = 0;
  int64_t epoch = 0;
  int64_t step = 0;
  std::string rng_state;
  std::string meta_json = "{}";
  std::map<std::string, Tensor> tensors;
  std::map<std::string, Tensor> opt_state;

  void save(const std::string& path) const;
  // Refuses a config-hash mismatch unless allow_mismatch is set.
  static Checkpoint load(const std::string& path, uint64_t expected_config_hash,
                         bool allow_mismatch = false);
  static Checkpoint load_any(const std::string& path);
};

// FNV-1a over the raw float bytes of all tensors whose name starts with
// `prefix`, in lexicographic name order. The freeze-contract audit primitive.
uint64_t hash_tensors(const std::map<std::string, Tensor>& tensors, const std::string& prefix);

}  // namespace bevseg::nn
