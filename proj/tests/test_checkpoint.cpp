// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "bevseg/core/rng.hpp"
#include "bevseg/nn/checkpoint.hpp"
#include "helpers.hpp"

using namespace bevseg;
using namespace bevseg::nn;

TEST_CASE("checkpoint binary round trip") {
  Rng rng(4);
  Checkpoint ck;
  ck.stage = kStageAe;
  ck.config_hash = 0xdeadbeefcafe1234ull;
  ck.epoch = 17;
  ck.step = 4242;
  ck.rng_state = rng.save_state();
  ck.meta_json = "{\"note\":\"round trip\"}";
  Tensor a({3, 4});
  Tensor b({2, 2, 2, 2});
  for (int64_t i = 0; i < a.numel(); ++i) a[i] = static_cast<float>(rng.normal());
  for (int64_t i = 0; i < b.numel(); ++i) b[i] = static_cast<float>(rng.normal());
  ck.tensors["alpha"] = a;
  ck.tensors["beta"] = b;
  Tensor m({3, 4});
  m.fill(0.25f);
  ck.opt_state["lion.m.alpha"] = m;

  const std::string path = testing::scratch_dir("ckpt") + "/model.bsck";
  ck.save(path);
  const Checkpoint back = Checkpoint::load(path, ck.config_hash);
  CHECK(back.stage == ck.stage);
  CHECK(back.epoch == 17);
  CHECK(back.step == 4242);
  CHECK(back.rng_state == ck.rng_state);
  CHECK(back.meta_json == ck.meta_json);
  CHECK(back.tensors.at("alpha").vec() == a.vec());
  CHECK(back.tensors.at("alpha").shape() == a.shape());
  CHECK(back.tensors.at("beta").vec() == b.vec());
  CHECK(back.opt_state.at("lion.m.alpha").vec() == m.vec());
}

TEST_CASE("config hash gate refuses mismatches unless overridden") {
  Checkpoint ck;
  ck.stage = kStageAlign;
  ck.config_hash = 111;
  const std::string path = testing::scratch_dir("ckpt_gate") + "/model.bsck";
  ck.save(path);
  CHECK_THROWS_AS((void)Checkpoint::load(path, 222), IoError);
  const Checkpoint forced = Checkpoint::load(path, 222, /*allow_mismatch=*/true);
  CHECK(forced.config_hash == 111);
  CHECK(Checkpoint::load_any(path).stage == kStageAlign);
}

TEST_CASE("corrupt files are rejected") {
  const std::string dir = testing::scratch_dir("ckpt_bad");
  CHECK_THROWS_AS((void)Checkpoint::load_any(dir + "/missing.bsck"), IoError);
  {
    std::ofstream os(dir + "/bad.bsck", std::ios::binary);
    os << "NOPE";
  }
  CHECK_THROWS_AS((void)Checkpoint::load_any(dir + "/bad.bsck"), IoError);
}

TEST_CASE("tensor hashing is prefix-scoped and order-stable") {
  std::map<std::string, Tensor> t;
  Tensor a({2});
  a[0] = 1;
  a[1] = 2;
  Tensor b({2});
  b[0] = 3;
  b[1] = 4;
  t["encoder.w"] = a;
  t["decoder.w"] = b;
  const uint64_t he = hash_tensors(t, "encoder.");
  const uint64_t hd = hash_tensors(t, "decoder.");
  CHECK(he != hd);
  t["decoder.w"][0] = 99;
  CHECK(hash_tensors(t, "encoder.") == he);
  CHECK(hash_tensors(t, "decoder.") != hd);
}

TEST_CASE("rng state survives serialization") {
  Rng a(123);
  for (int i = 0; i < 1000; ++i) a.normal();
  const std::string st = a.save_state();
  Rng b(0);
  b.load_state(st);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}
