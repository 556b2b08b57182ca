// SPDX-License-Identifier: Apache-2.0
#include "bevseg/cli/commands.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "bevseg/eval/figures.hpp"
#include "bevseg/model/ablation.hpp"
#include "bevseg/model/stages.hpp"

namespace bevseg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string default_out_root() {
  const char* env = std::getenv(kOutRootEnv);
  return env && *env ? env : "out";
}

namespace {

std::string platform_fingerprint() {
  std::string s = "bevseg ";
  s += kVersion;
#if defined(__clang__)
  s += " clang " __clang_version__;
#elif defined(__GNUC__)
  s += " gcc " + std::to_string(__GNUC__) + "." + std::to_string(__GNUC_MINOR__);
#endif
#if defined(__linux__)
  s += " linux";
#endif
  return s;
}

void write_run_manifest(const std::string& dir, json extra) {
  extra["tool_version"] = kVersion;
  extra["platform"] = platform_fingerprint();
  fs::create_directories(dir);
  std::ofstream os(fs::path(dir) / "run.json");
  os << extra.dump(2) << "\n";
}

ExperimentConfig load_config_or_default(const std::string& path) {
  if (path.empty()) {
    ExperimentConfig c = ExperimentConfig::desk_default();
    c.validate();
    return c;
  }
  return ExperimentConfig::load(path);
}

// checkpoints embed the full experiment config; an explicit --config wins
ExperimentConfig config_for_checkpoint(const nn::Checkpoint& ck, const std::string& override_path) {
  if (!override_path.empty()) return ExperimentConfig::load(override_path);
  const json meta = json::parse(ck.meta_json);
  require(meta.contains("config"), "checkpoint carries no embedded config; pass --config");
  return ExperimentConfig::from_json_text(meta.at("config").dump());
}

nn::Checkpoint load_ckpt_checked(const std::string& path, const ExperimentConfig& cfg,
                                 bool force) {
  return nn::Checkpoint::load(path, cfg.hash(), force);
}

double wall_seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int cmd_synth(const SynthArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg = load_config_or_default(a.config_path);
  const std::string out = a.out.empty() ? (fs::path(default_out_root()) / "dataset").string()
                                        : a.out;
  const synth::BuildResult res =
      synth::build_dataset(cfg.recipe, cfg.camera, cfg.grid, cfg.polar, a.n, a.seed, out);
  if (res.up_to_date) {
    std::cout << "dataset up to date: " << out << "\n";
    return 0;
  }
  std::cout << "built " << res.manifest.n << " samples under " << out << " ("
            << res.manifest.train_ids.size() << " train / " << res.manifest.val_ids.size()
            << " val)\n";
  json rm;
  rm["command"] = "synth";
  rm["config_hash"] = hex64(cfg.hash());
  rm["dataset"] = out;
  rm["recipe_hash"] = res.manifest.recipe_hash;
  rm["n"] = a.n;
  rm["seed"] = a.seed;
  rm["wall_seconds"] = wall_seconds_since(t0);
  write_run_manifest((fs::path(out) / "runs" / "synth").string(), rm);
  return 0;
}

int cmd_train(const TrainArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg = load_config_or_default(a.config_path);
  std::string stage = a.stage;
  if (a.ablate_td) {
    cfg.ablate.td = false;
    cfg.ablate.ft = false;
    stage = "joint";
  }
  require(stage == "ae" || stage == "align" || stage == "finetune" || stage == "joint",
          "train: unknown stage " + stage);
  require(!a.dataset.empty(), "train: --dataset is required");
  const std::string out = a.out_ckpt.empty()
                              ? (fs::path(default_out_root()) / ("ckpt_" + stage + ".bsck")).string()
                              : a.out_ckpt;

  const synth::TrainData data = synth::load_training_data(a.dataset, cfg.polar);
  require(static_cast<int>(data.manifest.class_names.size()) == cfg.num_classes(),
          "train: dataset classes do not match config");

  model::StageResult res;
  if (stage == "ae") {
    nn::Checkpoint resume;
    const nn::Checkpoint* rp = nullptr;
    if (!a.resume_ckpt.empty()) {
      resume = load_ckpt_checked(a.resume_ckpt, cfg, a.force_hash);
      rp = &resume;
    }
    res = model::train_stage1(data, cfg, rp, &std::cerr);
  } else if (stage == "align") {
    require(!a.from_ckpt.empty(), "train align: --from <ae checkpoint> is required");
    const nn::Checkpoint ae = load_ckpt_checked(a.from_ckpt, cfg, a.force_hash);
    res = model::train_stage2(data, cfg, ae, &std::cerr);
  } else if (stage == "finetune") {
    require(!a.from_ckpt.empty(), "train finetune: --from <align checkpoint> is required");
    const nn::Checkpoint align = load_ckpt_checked(a.from_ckpt, cfg, a.force_hash);
    res = model::train_stage3(data, cfg, align, &std::cerr);
  } else {
    res = model::train_joint(data, cfg, &std::cerr);
  }
  fs::create_directories(fs::path(out).parent_path().empty() ? "." : fs::path(out).parent_path());
  res.ckpt.save(out);
  std::cout << "stage " << res.ckpt.stage << " checkpoint: " << out << " (final train loss "
            << (res.train_losses.empty() ? 0.0 : res.train_losses.back()) << ")\n";

  json rm;
  rm["command"] = "train";
  rm["stage"] = res.ckpt.stage;
  rm["config_hash"] = hex64(cfg.hash());
  rm["dataset"] = a.dataset;
  rm["checkpoint"] = out;
  rm["from"] = a.from_ckpt;
  rm["final_train_loss"] = res.train_losses.empty() ? 0.0 : res.train_losses.back();
  rm["final_val_loss"] = res.val_losses.empty() ? 0.0 : res.val_losses.back();
  rm["wall_seconds"] = wall_seconds_since(t0);
  write_run_manifest((fs::path(out).parent_path() / "runs" / ("train_" + res.ckpt.stage)).string(),
                     rm);
  return 0;
}

int cmd_eval(const EvalArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  require(!a.ckpt.empty() && !a.dataset.empty(), "eval: --ckpt and --dataset are required");
  const nn::Checkpoint ck = nn::Checkpoint::load_any(a.ckpt);
  ExperimentConfig cfg = config_for_checkpoint(ck, a.config_path);
  if (!a.force_hash && a.config_path.empty())
    require(ck.config_hash == cfg.hash(), "eval: checkpoint/config hash mismatch");
  const synth::TrainData data = synth::load_training_data(a.dataset, cfg.polar);
  const bool val = a.split != "train";
  const eval::EvalReport rep =
      model::evaluate_split(data, val, ck, cfg, !a.no_visibility_mask);

  const std::string dir = a.out_dir.empty()
                              ? (fs::path(default_out_root()) / "eval").string()
                              : a.out_dir;
  fs::create_directories(dir);
  std::ofstream os(fs::path(dir) / "report.json");
  os << rep.to_json() << "\n";
  eval::render_class_bars(rep, (fs::path(dir) / "class_iou.png").string());
  eval::render_distance_curves(rep, (fs::path(dir) / "iou_over_distance.png").string());
  std::cout << rep.to_markdown();
  std::cout << "report written to " << dir << (rep.visibility_used ? "" : " (no visibility mask)")
            << "\n";

  json rm;
  rm["command"] = "eval";
  rm["checkpoint"] = a.ckpt;
  rm["stage"] = ck.stage;
  rm["config_hash"] = hex64(cfg.hash());
  rm["dataset"] = a.dataset;
  rm["split"] = a.split;
  rm["visibility_used"] = rep.visibility_used;
  rm["mean_iou"] = rep.mean_iou;
  rm["wall_seconds"] = wall_seconds_since(t0);
  write_run_manifest((fs::path(dir) / "runs").string(), rm);
  return 0;
}

int cmd_ablate(const AblateArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  require(!a.dataset.empty(), "ablate: --dataset is required");
  ExperimentConfig cfg = load_config_or_default(a.config_path);
  const synth::TrainData data = synth::load_training_data(a.dataset, cfg.polar);
  const std::string dir = a.out_dir.empty()
                              ? (fs::path(default_out_root()) / "ablation").string()
                              : a.out_dir;
  fs::create_directories(dir);

  json results = json::array();
  std::string table = "| group | CST | TD | CWT | FT |";
  std::vector<std::string> strata_names;
  for (const auto& [name, members] : cfg.eval.strata) strata_names.push_back(name);
  for (const auto& s : strata_names) table += " " + s + " |";
  table += " mean |\n|---|---|---|---|---|";
  for (size_t i = 0; i < strata_names.size(); ++i) table += "---|";
  table += "---|\n";

  for (const auto& group : a.groups) {
    const AblationFlags f = model::group_flags(group);
    std::vector<double> strata_sum(strata_names.size(), 0.0);
    double mean_sum = 0;
    for (uint64_t seed : a.seeds) {
      const model::GroupResult r = model::run_ablation_group(data, cfg, group, seed, &std::cerr);
      mean_sum += r.report.mean_iou;
      for (size_t s = 0; s < strata_names.size(); ++s)
        for (const auto& [name, v] : r.report.stratum_iou)
          if (name == strata_names[s]) strata_sum[s] += v;
      json jr;
      jr["group"] = group;
      jr["seed"] = seed;
      jr["report"] = json::parse(r.report.to_json());
      results.push_back(jr);
    }
    const double denom = static_cast<double>(a.seeds.size());
    char row[256];
    std::string line = "| " + group + " | " + (f.cst ? "x" : " ") + " | " + (f.td ? "x" : " ") +
                       " | " + (f.cwt ? "x" : " ") + " | " + (f.ft ? "x" : " ") + " |";
    for (size_t s = 0; s < strata_names.size(); ++s) {
      snprintf(row, sizeof row, " %.4f |", strata_sum[s] / denom);
      line += row;
    }
    snprintf(row, sizeof row, " %.4f |\n", mean_sum / denom);
    line += row;
    table += line;
  }

  std::ofstream ts(fs::path(dir) / "ablation.md");
  ts << table;
  std::ofstream js(fs::path(dir) / "ablation.json");
  js << results.dump(2) << "\n";
  std::cout << table;
  std::cout << "ablation table written to " << dir << "\n";

  json rm;
  rm["command"] = "ablate";
  rm["config_hash"] = hex64(cfg.hash());
  rm["dataset"] = a.dataset;
  rm["groups"] = a.groups;
  rm["seeds"] = a.seeds;
  rm["wall_seconds"] = wall_seconds_since(t0);
  write_run_manifest((fs::path(dir) / "runs").string(), rm);
  return 0;
}

int cmd_infer(const InferArgs& a) {
  require(!a.ckpt.empty() && !a.input.empty(), "infer: --ckpt and --input are required");
  const nn::Checkpoint ck = nn::Checkpoint::load_any(a.ckpt);
  ExperimentConfig cfg = config_for_checkpoint(ck, a.config_path);
  const std::string dir = a.out_dir.empty()
                              ? (fs::path(default_out_root()) / "infer").string()
                              : a.out_dir;
  fs::create_directories(dir);

  std::vector<fs::path> inputs;
  if (fs::is_directory(a.input)) {
    for (const auto& e : fs::directory_iterator(a.input))
      if (e.path().extension() == ".png") inputs.push_back(e.path());
    std::sort(inputs.begin(), inputs.end());
  } else {
    inputs.push_back(a.input);
  }
  require(!inputs.empty(), "infer: no .png inputs found");

  model::InferenceEngine engine(ck, cfg);
  for (const auto& in : inputs) {
    const ImageU8 img = load_png(in.string());
    const geometry::BevMap pred = engine.run(img);
    // ground truth is optional: a sibling .mask file renders a third panel
    geometry::BevMap gt;
    const geometry::BevMap* gtp = nullptr;
    const fs::path maskp = fs::path(in).replace_extension(".mask");
    if (fs::exists(maskp)) {
      synth::DatasetManifest m;
      // minimal read through the sample loader requires a manifest; decode inline instead
      std::ifstream is(maskp, std::ios::binary);
      char magic[4];
      is.read(magic, 4);
      uint32_t np = 0, r = 0, c = 0;
      is.read(reinterpret_cast<char*>(&np), 4);
      is.read(reinterpret_cast<char*>(&r), 4);
      is.read(reinterpret_cast<char*>(&c), 4);
      if (std::string(magic, 4) == "BVMK" && static_cast<int>(r) == cfg.grid.rows &&
          static_cast<int>(c) == cfg.grid.cols &&
          np >= static_cast<uint32_t>(cfg.num_classes())) {
        gt = geometry::BevMap(cfg.grid, cfg.num_classes());
        const size_t cells = gt.cells();
        const size_t stride = synth::plane_stride_bytes(cells);
        std::vector<uint8_t> bits(stride);
        for (int k = 0; k < cfg.num_classes(); ++k) {
          is.read(reinterpret_cast<char*>(bits.data()), static_cast<std::streamsize>(stride));
          for (size_t i = 0; i < cells; ++i)
            gt.channel(k)[i] = synth::get_bit(bits, 0, i) ? 1.0f : 0.0f;
        }
        gtp = &gt;
      }
    }
    const std::string out = (fs::path(dir) / (in.stem().string() + "_overlay.png")).string();
    eval::render_prediction_overlay(img, pred, gtp, cfg.recipe.classes, 0.5, out);
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

int cmd_plot(const PlotArgs& a) {
  require(!a.report.empty(), "plot: --report is required");
  std::ifstream is(a.report);
  if (!is) throw IoError("plot: cannot open " + a.report);
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  const eval::EvalReport rep = eval::EvalReport::from_json(text);
  const std::string dir = a.out_dir.empty()
                              ? (fs::path(default_out_root()) / "plots").string()
                              : a.out_dir;
  fs::create_directories(dir);
  eval::render_class_bars(rep, (fs::path(dir) / "class_iou.png").string());
  eval::render_distance_curves(rep, (fs::path(dir) / "iou_over_distance.png").string());
  std::cout << "figures written to " << dir << "\n";
  return 0;
}

}  // namespace bevseg::cli
