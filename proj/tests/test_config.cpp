// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "bevseg/config.hpp"
#include "helpers.hpp"

using namespace bevseg;

TEST_CASE("desk and paper profiles validate and hash differently") {
  const ExperimentConfig desk = ExperimentConfig::desk_default();
  desk.validate();
  CHECK(desk.polar.range_bins == 32);
  CHECK(desk.polar.azimuth_bins == 88);
  CHECK(desk.latent_rows() == 4);
  CHECK(desk.latent_cols() == 11);

  const ExperimentConfig paper = ExperimentConfig::paper_scale();
  paper.validate();
  CHECK(paper.polar.range_bins == 64);
  CHECK(paper.polar.azimuth_bins == 176);
  CHECK(paper.latent_rows() == 8);
  CHECK(paper.latent_cols() == 22);
  CHECK(paper.preproc.crop_h == 256);

  CHECK(desk.hash() != paper.hash());
  CHECK(desk.hash() == ExperimentConfig::desk_default().hash());
}

TEST_CASE("json round trip preserves the hash") {
  const ExperimentConfig c = testing::tiny_config();
  const ExperimentConfig back = ExperimentConfig::from_json_text(c.to_json(true));
  CHECK(back.hash() == c.hash());
  CHECK(back.polar.azimuth_bins == c.polar.azimuth_bins);
  CHECK(back.train.epochs_stage1 == c.train.epochs_stage1);
  CHECK(back.recipe.cars_mean == c.recipe.cars_mean);
  CHECK(back.eval.thresholds == c.eval.thresholds);
}

TEST_CASE("unknown keys are rejected at every level") {
  CHECK_THROWS_WITH_AS(
      (void)ExperimentConfig::from_json_text(R"({"schema_version":1,"bogus":3})"),
      doctest::Contains("unknown key 'bogus'"), InvalidInput);
  CHECK_THROWS_WITH_AS((void)ExperimentConfig::from_json_text(
                           R"({"schema_version":1,"train":{"lr_stage9":0.1}})"),
                       doctest::Contains("unknown key 'lr_stage9'"), InvalidInput);
  CHECK_THROWS_WITH_AS((void)ExperimentConfig::from_json_text(
                           R"({"schema_version":1,"ablate":{"cstt":true}})"),
                       doctest::Contains("unknown key 'cstt'"), InvalidInput);
  CHECK_THROWS_AS((void)ExperimentConfig::from_json_text("{not json"), InvalidInput);
}

TEST_CASE("divisibility and flag invariants are enforced") {
  SUBCASE("feature width must match azimuth bins") {
    auto c = ExperimentConfig::desk_default();
    c.polar.azimuth_bins = 80;  // resize_w / 4 == 88
    CHECK_THROWS_AS(c.validate(), InvalidInput);
  }
  SUBCASE("polar dims must divide by the encoder stride") {
    auto c = ExperimentConfig::desk_default();
    c.polar = {28, 88, 50.0, 1.0};
    c.preproc.crop_h = 112;
    c.camera.image_height = 112;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
  }
  SUBCASE("ft requires td") {
    auto c = ExperimentConfig::desk_default();
    c.ablate.td = false;
    c.ablate.ft = true;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
  }
  SUBCASE("camera and polar fov must agree") {
    auto c = ExperimentConfig::desk_default();
    c.camera.fov = 0.9;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
  }
  SUBCASE("heads must divide feature channels") {
    auto c = ExperimentConfig::desk_default();
    c.model.transformer_heads = 5;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
  }
}

TEST_CASE("config files save and load") {
  const std::string dir = bevseg::testing::scratch_dir("config");
  const ExperimentConfig c = bevseg::testing::tiny_config();
  c.save(dir + "/exp.json");
  const ExperimentConfig back = ExperimentConfig::load(dir + "/exp.json");
  CHECK(back.hash() == c.hash());
  CHECK_THROWS_AS((void)ExperimentConfig::load(dir + "/nope.json"), IoError);
}
