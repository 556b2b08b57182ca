// SPDX-License-Identifier: Apache-2.0
#include "bevseg/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

namespace bevseg {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  require(j.is_object(), "config: expected object at " + where);
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw InvalidInput("config: unknown key '" + it.key() + "' in " + where);
}

template <size_t N>
std::array<int, N> int_array(const json& j, const std::string& where) {
  require(j.is_array() && j.size() == N, "config: " + where + " must have " + std::to_string(N) +
                                             " entries");
  std::array<int, N> a{};
  for (size_t i = 0; i < N; ++i) a[i] = j[i].get<int>();
  return a;
}

template <size_t N>
std::array<float, N> float_array(const json& j, const std::string& where) {
  require(j.is_array() && j.size() == N, "config: " + where + " must have " + std::to_string(N) +
                                             " entries");
  std::array<float, N> a{};
  for (size_t i = 0; i < N; ++i) a[i] = j[i].get<float>();
  return a;
}

}  // namespace

ExperimentConfig ExperimentConfig::desk_default() {
  ExperimentConfig c;
  c.profile = "desk";
  c.grid = geometry::GridSpec::from_ranges(0.0, 50.0, -25.0, 25.0, 0.25);
  c.polar = {32, 88, 50.0, 1.0};
  c.camera = {1.0, 352, 128, 198, 1.5};
  c.preproc.resize_h = 128;
  c.preproc.resize_w = 352;
  c.preproc.crop_h = 128;
  c.eval = eval::EvalConfig::defaults();
  return c;
}

ExperimentConfig ExperimentConfig::paper_scale() {
  ExperimentConfig c = desk_default();
  c.profile = "paper";
  c.polar = {64, 176, 50.0, 1.0};
  c.camera = {1.0, 704, 256, 396, 1.5};
  c.preproc.resize_h = 256;
  c.preproc.resize_w = 704;
  c.preproc.crop_h = 256;
  return c;
}

void ExperimentConfig::validate() const {
  grid.validate();
  polar.validate();
  camera.validate();
  recipe.validate();
  require(camera.fov == polar.fov, "config: camera.fov must equal polar.fov");
  require(grid.x_max >= polar.max_range, "config: grid forward extent < polar max_range");
  require(preproc.crop_h <= preproc.resize_h, "config: crop taller than resize");
  require(preproc.resize_w % 4 == 0 && preproc.crop_h % 4 == 0,
          "config: preproc dims must divide by the backbone stride");
  require(preproc.resize_w / 4 == polar.azimuth_bins,
          "config: feature width (resize_w/4) must equal polar azimuth_bins");
  require(preproc.crop_h / 4 == polar.range_bins,
          "config: feature height (crop_h/4) must equal polar range_bins");
  require(polar.range_bins % 8 == 0 && polar.azimuth_bins % 8 == 0,
          "config: polar dims must divide by the encoder stride 8");
  require(model.feature_channels % model.transformer_heads == 0,
          "config: transformer heads must divide feature channels");
  require(model.eta >= 0 && model.eta <= 1, "config: eta must be in [0,1]");
  require(model.prediction_warp == "nearest" || model.prediction_warp == "bilinear",
          "config: prediction_warp must be nearest or bilinear");
  require(train.optimizer == "lion" || train.optimizer == "adamw",
          "config: optimizer must be lion or adamw");
  require(train.batch_size >= 1, "config: batch_size must be >= 1");
  require(train.epochs_stage1 >= 1 && train.epochs_stage2 >= 1 && train.epochs_stage3 >= 1 &&
              train.epochs_joint >= 1,
          "config: epochs must be >= 1");
  require(train.warmup_frac >= 0 && train.warmup_frac < 1, "config: warmup_frac in [0,1)");
  require(!ablate.ft || ablate.td, "config: ft requires td");
  require(!eval.thresholds.empty(), "config: empty eval threshold grid");
}

model::PipelineShape ExperimentConfig::pipeline_shape() const {
  model::PipelineShape s;
  s.feature_channels = model.feature_channels;
  s.backbone_channels = model.backbone_channels;
  s.head_channels = model.head_channels;
  s.latent_channels = model.latent_channels;
  s.transformer_layers = model.transformer_layers;
  s.transformer_heads = model.transformer_heads;
  s.transformer_ff_mult = model.transformer_ff_mult;
  s.feature_rows = preproc.crop_h / 4;
  s.use_transformer = ablate.cwt;
  return s;
}

std::string ExperimentConfig::to_json(bool pretty) const {
  json j;
  j["schema_version"] = schema_version;
  j["profile"] = profile;
  j["grid"] = {{"x_min", grid.x_min}, {"x_max", grid.x_max}, {"y_min", grid.y_min},
               {"y_max", grid.y_max}, {"resolution", grid.resolution}};
  j["polar"] = {{"range_bins", polar.range_bins},
                {"azimuth_bins", polar.azimuth_bins},
                {"max_range", polar.max_range},
                {"fov", polar.fov}};
  j["camera"] = {{"fov", camera.fov},
                 {"image_width", camera.image_width},
                 {"image_height", camera.image_height},
                 {"virtual_height", camera.virtual_height},
                 {"camera_height", camera.camera_height}};
  j["recipe"] = json::parse(recipe.to_json());
  j["model"] = {{"latent_channels", model.latent_channels},
                {"feature_channels", model.feature_channels},
                {"encoder_channels", model.encoder_channels},
                {"backbone_channels", model.backbone_channels},
                {"head_channels", model.head_channels},
                {"transformer_layers", model.transformer_layers},
                {"transformer_heads", model.transformer_heads},
                {"transformer_ff_mult", model.transformer_ff_mult},
                {"eta", model.eta},
                {"weight_clip_lo", model.weight_clip_lo},
                {"weight_clip_hi", model.weight_clip_hi},
                {"prediction_warp", model.prediction_warp}};
  j["preproc"] = {{"resize_h", preproc.resize_h},
                  {"resize_w", preproc.resize_w},
                  {"crop_h", preproc.crop_h},
                  {"mean", preproc.mean},
                  {"stdev", preproc.stdev}};
  j["train"] = {{"lr_stage1", train.lr_stage1},
                {"lr_stage2", train.lr_stage2},
                {"lr_stage3", train.lr_stage3},
                {"lr_joint", train.lr_joint},
                {"weight_decay", train.weight_decay},
                {"warmup_frac", train.warmup_frac},
                {"cosine", train.cosine},
                {"epochs_stage1", train.epochs_stage1},
                {"epochs_stage2", train.epochs_stage2},
                {"epochs_stage3", train.epochs_stage3},
                {"epochs_joint", train.epochs_joint},
                {"batch_size", train.batch_size},
                {"seed", train.seed},
                {"optimizer", train.optimizer}};
  j["ablate"] = {{"cst", ablate.cst}, {"td", ablate.td}, {"cwt", ablate.cwt}, {"ft", ablate.ft}};
  json strata = json::array();
  for (const auto& [name, members] : eval.strata)
    strata.push_back(json{{"name", name}, {"classes", members}});
  j["eval"] = {{"thresholds", eval.thresholds},
               {"bin_width_m", eval.bin_width_m},
               {"use_visibility", eval.use_visibility},
               {"strata", strata}};
  return pretty ? j.dump(2) : j.dump();
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("config: JSON parse error: ") + e.what());
  }
  check_keys(j, {"schema_version", "profile", "grid", "polar", "camera", "recipe", "model",
                 "preproc", "train", "ablate", "eval"},
             "config root");
  ExperimentConfig c = desk_default();
  c.schema_version = j.at("schema_version").get<int>();
  require(c.schema_version == 1, "config: unsupported schema_version");
  if (j.contains("profile")) c.profile = j.at("profile").get<std::string>();

  if (j.contains("grid")) {
    const json& g = j.at("grid");
    check_keys(g, {"x_min", "x_max", "y_min", "y_max", "resolution"}, "grid");
    c.grid = geometry::GridSpec::from_ranges(g.at("x_min"), g.at("x_max"), g.at("y_min"),
                                             g.at("y_max"), g.at("resolution"));
  }
  if (j.contains("polar")) {
    const json& p = j.at("polar");
    check_keys(p, {"range_bins", "azimuth_bins", "max_range", "fov"}, "polar");
    c.polar.range_bins = p.at("range_bins");
    c.polar.azimuth_bins = p.at("azimuth_bins");
    c.polar.max_range = p.at("max_range");
    c.polar.fov = p.at("fov");
  }
  if (j.contains("camera")) {
    const json& cm = j.at("camera");
    check_keys(cm, {"fov", "image_width", "image_height", "virtual_height", "camera_height"},
               "camera");
    c.camera.fov = cm.at("fov");
    c.camera.image_width = cm.at("image_width");
    c.camera.image_height = cm.at("image_height");
    c.camera.virtual_height = cm.at("virtual_height");
    c.camera.camera_height = cm.at("camera_height");
  }
  if (j.contains("recipe")) {
    // recipe parsing is strict against its own serialized key set
    const json defaults = json::parse(synth::SceneRecipe().to_json());
    std::set<std::string> keys;
    for (auto it = defaults.begin(); it != defaults.end(); ++it) keys.insert(it.key());
    check_keys(j.at("recipe"), keys, "recipe");
    c.recipe = synth::SceneRecipe::from_json(j.at("recipe").dump());
  }
  if (j.contains("model")) {
    const json& m = j.at("model");
    check_keys(m, {"latent_channels", "feature_channels", "encoder_channels", "backbone_channels",
                   "head_channels", "transformer_layers", "transformer_heads",
                   "transformer_ff_mult", "eta", "weight_clip_lo", "weight_clip_hi",
                   "prediction_warp"},
               "model");
    c.model.latent_channels = m.value("latent_channels", c.model.latent_channels);
    c.model.feature_channels = m.value("feature_channels", c.model.feature_channels);
    if (m.contains("encoder_channels"))
      c.model.encoder_channels = int_array<3>(m.at("encoder_channels"), "encoder_channels");
    if (m.contains("backbone_channels"))
      c.model.backbone_channels = int_array<4>(m.at("backbone_channels"), "backbone_channels");
    c.model.head_channels = m.value("head_channels", c.model.head_channels);
    c.model.transformer_layers = m.value("transformer_layers", c.model.transformer_layers);
    c.model.transformer_heads = m.value("transformer_heads", c.model.transformer_heads);
    c.model.transformer_ff_mult = m.value("transformer_ff_mult", c.model.transformer_ff_mult);
    c.model.eta = m.value("eta", c.model.eta);
    c.model.weight_clip_lo = m.value("weight_clip_lo", c.model.weight_clip_lo);
    c.model.weight_clip_hi = m.value("weight_clip_hi", c.model.weight_clip_hi);
    c.model.prediction_warp = m.value("prediction_warp", c.model.prediction_warp);
  }
  if (j.contains("preproc")) {
    const json& p = j.at("preproc");
    check_keys(p, {"resize_h", "resize_w", "crop_h", "mean", "stdev"}, "preproc");
    c.preproc.resize_h = p.value("resize_h", c.preproc.resize_h);
    c.preproc.resize_w = p.value("resize_w", c.preproc.resize_w);
    c.preproc.crop_h = p.value("crop_h", c.preproc.crop_h);
    if (p.contains("mean")) c.preproc.mean = float_array<3>(p.at("mean"), "preproc.mean");
    if (p.contains("stdev")) c.preproc.stdev = float_array<3>(p.at("stdev"), "preproc.stdev");
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    check_keys(t, {"lr_stage1", "lr_stage2", "lr_stage3", "lr_joint", "weight_decay",
                   "warmup_frac", "cosine", "epochs_stage1", "epochs_stage2", "epochs_stage3",
                   "epochs_joint", "batch_size", "seed", "optimizer"},
               "train");
    c.train.lr_stage1 = t.value("lr_stage1", c.train.lr_stage1);
    c.train.lr_stage2 = t.value("lr_stage2", c.train.lr_stage2);
    c.train.lr_stage3 = t.value("lr_stage3", c.train.lr_stage3);
    c.train.lr_joint = t.value("lr_joint", c.train.lr_joint);
    c.train.weight_decay = t.value("weight_decay", c.train.weight_decay);
    c.train.warmup_frac = t.value("warmup_frac", c.train.warmup_frac);
    c.train.cosine = t.value("cosine", c.train.cosine);
    c.train.epochs_stage1 = t.value("epochs_stage1", c.train.epochs_stage1);
    c.train.epochs_stage2 = t.value("epochs_stage2", c.train.epochs_stage2);
    c.train.epochs_stage3 = t.value("epochs_stage3", c.train.epochs_stage3);
    c.train.epochs_joint = t.value("epochs_joint", c.train.epochs_joint);
    c.train.batch_size = t.value("batch_size", c.train.batch_size);
    c.train.seed = t.value("seed", c.train.seed);
    c.train.optimizer = t.value("optimizer", c.train.optimizer);
  }
  if (j.contains("ablate")) {
    const json& a = j.at("ablate");
    check_keys(a, {"cst", "td", "cwt", "ft"}, "ablate");
    c.ablate.cst = a.value("cst", c.ablate.cst);
    c.ablate.td = a.value("td", c.ablate.td);
    c.ablate.cwt = a.value("cwt", c.ablate.cwt);
    c.ablate.ft = a.value("ft", c.ablate.ft);
  }
  if (j.contains("eval")) {
    const json& e = j.at("eval");
    check_keys(e, {"thresholds", "bin_width_m", "use_visibility", "strata"}, "eval");
    if (e.contains("thresholds"))
      c.eval.thresholds = e.at("thresholds").get<std::vector<double>>();
    c.eval.bin_width_m = e.value("bin_width_m", c.eval.bin_width_m);
    c.eval.use_visibility = e.value("use_visibility", c.eval.use_visibility);
    if (e.contains("strata")) {
      c.eval.strata.clear();
      for (const auto& s : e.at("strata")) {
        check_keys(s, {"name", "classes"}, "eval.strata entry");
        c.eval.strata.emplace_back(s.at("name").get<std::string>(),
                                   s.at("classes").get<std::vector<std::string>>());
      }
    }
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  try {
    return from_json_text(text);
  } catch (const InvalidInput& e) {
    throw InvalidInput(std::string(e.what()) + " (file: " + path + ")");
  }
}

void ExperimentConfig::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw IoError("config: cannot write " + path);
  os << to_json(true) << "\n";
}

}  // namespace bevseg
