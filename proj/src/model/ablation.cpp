// SPDX-License-Identifier: Apache-2.0
#include "bevseg/model/ablation.hpp"

namespace bevseg::model {

AblationFlags group_flags(const std::string& group) {
  if (group == "I") return {false, false, false, false};
  if (group == "II") return {false, true, false, false};
  if (group == "III") return {true, false, false, false};
  if (group == "IV") return {true, true, false, false};
  if (group == "V") return {true, false, true, false};
  if (group == "VI") return {true, true, true, false};
  if (group == "VII") return {true, true, true, true};
  throw InvalidInput("unknown ablation group: " + group);
}

GroupResult run_ablation_group(const synth::TrainData& data, ExperimentConfig cfg,
                               const std::string& group, uint64_t seed, std::ostream* log) {
  cfg.ablate = group_flags(group);
  cfg.train.seed = seed;
  cfg.validate();

  GroupResult out;
  out.group = group;
  out.seed = seed;
  if (log) *log << "== group " << group << " seed " << seed << "\n";
  if (cfg.ablate.td) {
    StageResult s1 = train_stage1(data, cfg, nullptr, log);
    out.ae_ckpt = s1.ckpt;
    StageResult s2 = train_stage2(data, cfg, out.ae_ckpt, log);
    out.align_ckpt = s2.ckpt;
    if (cfg.ablate.ft) {
      StageResult s3 = train_stage3(data, cfg, out.align_ckpt, log);
      out.final_ckpt = s3.ckpt;
    } else {
      out.final_ckpt = out.align_ckpt;
    }
  } else {
    StageResult sj = train_joint(data, cfg, log);
    out.final_ckpt = sj.ckpt;
  }
  out.report = evaluate_split(data, /*val_split=*/true, out.final_ckpt, cfg,
                              cfg.eval.use_visibility);
  if (log) {
    *log << "== group " << group << " seed " << seed << " mIoU " << out.report.mean_iou;
    for (const auto& [name, v] : out.report.stratum_iou) *log << " " << name << " " << v;
    *log << "\n";
  }
  return out;
}

}  // namespace bevseg::model
