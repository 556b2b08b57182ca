// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace bevseg::cli {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kOutRootEnv = "BEVSEG_OUT";

std::string default_out_root();

struct SynthArgs {
  std::string config_path;  // empty -> desk defaults
  int n = 100;
  uint64_t seed = 7;
  std::string out;
};

struct TrainArgs {
  std::string stage = "ae";  // ae | align | finetune | joint
  std::string config_path;
  std::string dataset;
  std::string out_ckpt;
  std::string from_ckpt;    // prior stage
  std::string resume_ckpt;  // same stage, continue
  bool ablate_td = false;   // end-to-end baseline shortcut
  bool force_hash = false;
};

struct EvalArgs {
  std::string ckpt;
  std::string dataset;
  std::string split = "val";
  std::string out_dir;
  std::string config_path;  // optional override of the embedded config
  bool no_visibility_mask = false;
  bool force_hash = false;
};

struct AblateArgs {
  std::string config_path;
  std::string dataset;
  std::vector<std::string> groups = {"I", "III", "V", "VI", "VII"};
  std::vector<uint64_t> seeds = {1, 2, 3};
  std::string out_dir;
};

struct InferArgs {
  std::string ckpt;
  std::string input;  // png file or directory
  std::string out_dir;
  std::string config_path;
  bool force_hash = false;
};

struct PlotArgs {
  std::string report;
  std::string out_dir;
};

int cmd_synth(const SynthArgs& a);
int cmd_train(const TrainArgs& a);
int cmd_eval(const EvalArgs& a);
int cmd_ablate(const AblateArgs& a);
int cmd_infer(const InferArgs& a);
int cmd_plot(const PlotArgs& a);

}  // namespace bevseg::cli
