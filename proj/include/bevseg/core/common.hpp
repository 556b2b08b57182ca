// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bevseg {

// Contract violation on an operation input (shape/spec mismatch, bad range).
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Unrecoverable failure while generating data (infeasible recipe etc.).
struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Training aborted (non-finite loss, bad lineage).
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidInput(msg);
}

// FNV-1a, used for config/parameter fingerprints (not cryptographic).
inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

std::string hex64(uint64_t v);

}  // namespace bevseg
