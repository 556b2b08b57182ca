// SPDX-License-Identifier: Apache-2.0
#include "bevseg/nn/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include "bevseg/core/common.hpp"

namespace bevseg::nn {

namespace {

constexpr char kMagic[4] = {'B', 'S', 'C', 'K'};

void put_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void put_u64(std::ostream& os, uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
void put_i64(std::ostream& os, int64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
void put_str(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

uint32_t get_u32(std::istream& is) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
uint64_t get_u64(std::istream& is) {
  uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
int64_t get_i64(std::istream& is) {
  int64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
std::string get_str(std::istream& is) {
  const uint32_t n = get_u32(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  return s;
}

void put_tensor_map(std::ostream& os, const std::map<std::string, Tensor>& m) {
  put_u32(os, static_cast<uint32_t>(m.size()));
  for (const auto& [name, t] : m) {
    put_str(os, name);
    put_u32(os, static_cast<uint32_t>(t.ndim()));
    for (int i = 0; i < t.ndim(); ++i) put_u32(os, static_cast<uint32_t>(t.dim(i)));
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.numel() * sizeof(float)));
  }
}

std::map<std::string, Tensor> get_tensor_map(std::istream& is) {
  std::map<std::string, Tensor> m;
  const uint32_t n = get_u32(is);
  for (uint32_t i = 0; i < n; ++i) {
    const std::string name = get_str(is);
    const uint32_t nd = get_u32(is);
    std::vector<int> shape(nd);
    for (uint32_t d = 0; d < nd; ++d) shape[d] = static_cast<int>(get_u32(is));
    Tensor t(shape);
    is.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(float)));
    m.emplace(name, std::move(t));
  }
  return m;
}

}  // namespace

void Checkpoint::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("checkpoint: cannot open for writing: " + path);
  os.write(kMagic, 4);
  put_u32(os, version);
  put_str(os, stage);
  put_u64(os, config_hash);
  put_i64(os, epoch);
  put_i64(os, step);
  put_str(os, rng_state);
  put_str(os, meta_json);
  put_tensor_map(os, tensors);
  put_tensor_map(os, opt_state);
  if (!os) throw IoError("checkpoint: write failed: " + path);
}

Checkpoint Checkpoint::load_any(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("checkpoint: cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw IoError("checkpoint: bad magic: " + path);
  Checkpoint c;
  c.version = get_u32(is);
  if (c.version != 1) throw IoError("checkpoint: unsupported version");
  c.stage = get_str(is);
  c.config_hash = get_u64(is);
  c.epoch = get_i64(is);
  c.step = get_i64(is);
  c.rng_state = get_str(is);
  c.meta_json = get_str(is);
  c.tensors = get_tensor_map(is);
  c.opt_state = get_tensor_map(is);
  if (!is) throw IoError("checkpoint: truncated file: " + path);
  return c;
}

Checkpoint Checkpoint::load(const std::string& path, uint64_t expected_config_hash,
                            bool allow_mismatch) {
  Checkpoint c = load_any(path);
  if (c.config_hash != expected_config_hash && !allow_mismatch)
    throw IoError("checkpoint: config hash mismatch (" + hex64(c.config_hash) + " vs expected " +
                  hex64(expected_config_hash) + "); pass the override flag to load anyway");
  return c;
}

uint64_t hash_tensors(const std::map<std::string, Tensor>& tensors, const std::string& prefix) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& [name, t] : tensors) {
    if (name.rfind(prefix, 0) != 0) continue;
    h = fnv1a64(name.data(), name.size(), h);
    h = fnv1a64(t.data(), static_cast<size_t>(t.numel()) * sizeof(float), h);
  }
  return h;
}

}  // namespace bevseg::nn
