// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli() {
  const char* p = std::getenv("BEVSEG_CLI");
  REQUIRE_MESSAGE(p != nullptr, "BEVSEG_CLI must point at the built binary");
  return p;
}

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run(const std::string& args, const std::string& tag) {
  static int counter = 0;
  const std::string log =
      (fs::temp_directory_path() / ("bevseg_cli_" + tag + std::to_string(counter++) + ".log"))
          .string();
  const std::string cmd = cli() + " " + args + " > " + log + " 2>&1";
  const int raw = std::system(cmd.c_str());
  RunResult r;
  r.code = WEXITSTATUS(raw);
  std::ifstream is(log);
  r.out.assign((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return r;
}

}  // namespace

TEST_CASE("cli end-to-end walkthrough on the tiny profile") {
  const std::string dir = bevseg::testing::scratch_dir("cli");
  const std::string cfg_path = dir + "/exp.json";
  auto cfg = bevseg::testing::tiny_config();
  cfg.train.epochs_stage1 = 2;
  cfg.train.epochs_stage2 = 2;
  cfg.train.epochs_stage3 = 1;
  cfg.save(cfg_path);
  const std::string ds = dir + "/ds";

  // synth, then idempotent rerun
  auto r = run("synth --config " + cfg_path + " --n 10 --seed 7 --out " + ds, "synth");
  CHECK(r.code == 0);
  r = run("synth --config " + cfg_path + " --n 10 --seed 7 --out " + ds, "synth_again");
  CHECK(r.code == 0);
  CHECK(r.out.find("up to date") != std::string::npos);

  // stage pipeline with correct tags
  r = run("train ae --config " + cfg_path + " --dataset " + ds + " --out " + dir + "/ae.bsck",
          "train_ae");
  CHECK(r.code == 0);
  r = run("train align --config " + cfg_path + " --dataset " + ds + " --from " + dir +
              "/ae.bsck --out " + dir + "/align.bsck",
          "train_align");
  CHECK(r.code == 0);
  r = run("train finetune --config " + cfg_path + " --dataset " + ds + " --from " + dir +
              "/align.bsck --out " + dir + "/ft.bsck",
          "train_ft");
  CHECK(r.code == 0);

  // lineage violation: align from a finetune checkpoint
  r = run("train align --config " + cfg_path + " --dataset " + ds + " --from " + dir +
              "/ft.bsck --out " + dir + "/bad.bsck",
          "lineage");
  CHECK(r.code != 0);
  CHECK(r.out.find("stage") != std::string::npos);

  // joint baseline via the ablate-td shortcut
  r = run("train ae --ablate-td --config " + cfg_path + " --dataset " + ds + " --out " + dir +
              "/joint.bsck",
          "train_joint");
  CHECK(r.code == 0);

  // eval with and without the visibility mask
  r = run("eval --ckpt " + dir + "/ft.bsck --dataset " + ds + " --out " + dir + "/eval", "eval");
  CHECK(r.code == 0);
  CHECK(fs::exists(dir + "/eval/report.json"));
  CHECK(fs::exists(dir + "/eval/class_iou.png"));
  CHECK(fs::exists(dir + "/eval/iou_over_distance.png"));
  r = run("eval --ckpt " + dir + "/ft.bsck --dataset " + ds + " --out " + dir +
              "/eval_nomask --no-visibility-mask",
          "eval_nomask");
  CHECK(r.code == 0);
  CHECK(r.out.find("no visibility mask") != std::string::npos);

  // infer on a single sample and on a directory; missing gt is fine
  r = run("infer --ckpt " + dir + "/ft.bsck --input " + ds + "/val/000009.png --out " + dir +
              "/infer1",
          "infer1");
  CHECK(r.code == 0);
  CHECK(fs::exists(dir + "/infer1/000009_overlay.png"));
  const std::string lone = dir + "/lone";
  fs::create_directories(lone);
  fs::copy(ds + "/val/000009.png", lone + "/img.png");
  r = run("infer --ckpt " + dir + "/ft.bsck --input " + lone + " --out " + dir + "/infer2",
          "infer2");
  CHECK(r.code == 0);
  CHECK(fs::exists(dir + "/infer2/img_overlay.png"));

  // plot from the saved report
  r = run("plot --report " + dir + "/eval/report.json --out " + dir + "/plots", "plot");
  CHECK(r.code == 0);
  CHECK(fs::exists(dir + "/plots/class_iou.png"));

  // a small two-group ablation table
  r = run("ablate --config " + cfg_path + " --dataset " + ds +
              " --groups V VI --seeds 1 --out " + dir + "/ablation",
          "ablate");
  CHECK(r.code == 0);
  CHECK(fs::exists(dir + "/ablation/ablation.md"));
  std::ifstream is(dir + "/ablation/ablation.md");
  std::string table((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  CHECK(table.find("| V |") != std::string::npos);
  CHECK(table.find("| VI |") != std::string::npos);
}

TEST_CASE("cli error surfaces") {
  const std::string dir = bevseg::testing::scratch_dir("cli_err");

  // usage error: unknown subcommand
  auto r = run("frobnicate", "usage");
  CHECK(r.code == 1);

  // invalid config file: nonzero exit with a parse diagnostic and position
  const std::string bad = dir + "/bad.json";
  {
    std::ofstream os(bad);
    os << "{\n  \"schema_version\": 1,\n  \"train\": { broken\n}\n";
  }
  r = run("synth --config " + bad + " --n 2 --out " + dir + "/ds", "badcfg");
  CHECK(r.code == 1);
  CHECK(r.out.find("parse error") != std::string::npos);
  CHECK(r.out.find("line") != std::string::npos);

  // unknown config keys are rejected, not ignored
  const std::string unknown = dir + "/unknown.json";
  {
    std::ofstream os(unknown);
    os << R"({"schema_version":1,"ablate":{"cst":true,"typo":1}})";
  }
  r = run("synth --config " + unknown + " --n 2 --out " + dir + "/ds2", "unknowncfg");
  CHECK(r.code == 1);
  CHECK(r.out.find("unknown key 'typo'") != std::string::npos);

  // runtime error: missing dataset
  r = run("eval --ckpt nope.bsck --dataset nowhere", "missing");
  CHECK(r.code == 2);
}
