// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include <CLI11.hpp>

#include "bevseg/cli/commands.hpp"
#include "bevseg/core/common.hpp"

int main(int argc, char** argv) {
  using namespace bevseg::cli;
  CLI::App app{"bevseg: monocular BEV semantic segmentation on procedural scenes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "generate a paired dataset");
  synth->add_option("--config", sa.config_path, "experiment config (json)");
  synth->add_option("--n", sa.n, "sample count")->check(CLI::PositiveNumber);
  synth->add_option("--seed", sa.seed, "base seed");
  synth->add_option("--out", sa.out, "dataset directory");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "run one training stage");
  train->add_option("stage", ta.stage, "ae | align | finetune | joint")->required();
  train->add_option("--config", ta.config_path, "experiment config (json)");
  train->add_option("--dataset", ta.dataset, "dataset directory")->required();
  train->add_option("--out", ta.out_ckpt, "output checkpoint path");
  train->add_option("--from", ta.from_ckpt, "prior-stage checkpoint");
  train->add_option("--resume", ta.resume_ckpt, "same-stage checkpoint to continue");
  train->add_flag("--ablate-td", ta.ablate_td,
                  "train pipeline and decoder jointly (no task decomposition)");
  train->add_flag("--force-hash", ta.force_hash, "accept config-hash mismatches");

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  ev->add_option("--ckpt", ea.ckpt, "checkpoint")->required();
  ev->add_option("--dataset", ea.dataset, "dataset directory")->required();
  ev->add_option("--split", ea.split, "train | val");
  ev->add_option("--out", ea.out_dir, "report directory");
  ev->add_option("--config", ea.config_path, "override the embedded config");
  ev->add_flag("--no-visibility-mask", ea.no_visibility_mask, "evaluate every cell");
  ev->add_flag("--force-hash", ea.force_hash, "accept config-hash mismatches");

  AblateArgs aa;
  auto* ab = app.add_subcommand("ablate", "run component-ablation groups");
  ab->add_option("--config", aa.config_path, "experiment config (json)");
  ab->add_option("--dataset", aa.dataset, "dataset directory")->required();
  ab->add_option("--groups", aa.groups, "groups (I II III IV V VI VII)");
  ab->add_option("--seeds", aa.seeds, "training seeds to average");
  ab->add_option("--out", aa.out_dir, "output directory");

  InferArgs ia;
  auto* inf = app.add_subcommand("infer", "render prediction overlays");
  inf->add_option("--ckpt", ia.ckpt, "checkpoint")->required();
  inf->add_option("--input", ia.input, "png file or directory")->required();
  inf->add_option("--out", ia.out_dir, "output directory");
  inf->add_option("--config", ia.config_path, "override the embedded config");
  inf->add_flag("--force-hash", ia.force_hash, "accept config-hash mismatches");

  PlotArgs pa;
  auto* pl = app.add_subcommand("plot", "re-render figures from a report");
  pl->add_option("--report", pa.report, "report.json")->required();
  pl->add_option("--out", pa.out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  try {
    if (*synth) return cmd_synth(sa);
    if (*train) return cmd_train(ta);
    if (*ev) return cmd_eval(ea);
    if (*ab) return cmd_ablate(aa);
    if (*inf) return cmd_infer(ia);
    if (*pl) return cmd_plot(pa);
  } catch (const bevseg::InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
