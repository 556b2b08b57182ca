// SPDX-License-Identifier: Apache-2.0
#include "bevseg/model/stages.hpp"

#include <cmath>

#include <json.hpp>

#include "bevseg/nn/loss.hpp"
#include "bevseg/nn/optim.hpp"

namespace bevseg::model {

using nn::Checkpoint;
using nlohmann::json;
using synth::TrainData;
using synth::TrainSamples;

void store_named(const NamedTensors& named, std::map<std::string, Tensor>& out) {
  for (const auto& [name, t] : named) out.insert_or_assign(name, *t);
}

void load_named(const NamedTensors& named, const std::map<std::string, Tensor>& in) {
  for (const auto& [name, t] : named) {
    auto it = in.find(name);
    require(it != in.end(), "checkpoint: missing tensor " + name);
    require(it->second.numel() == t->numel(), "checkpoint: shape mismatch for " + name);
    *t = it->second;
  }
}

Tensor targets_batch(const TrainSamples& s, const std::vector<int>& pick, bool raster,
                     int classes, int rows, int cols) {
  const size_t cells = static_cast<size_t>(rows) * cols;
  const size_t stride = synth::plane_stride_bytes(cells);
  Tensor y({static_cast<int>(pick.size()), classes, rows, cols});
  for (size_t b = 0; b < pick.size(); ++b) {
    const auto& bits = raster ? s.raster_bits[pick[b]] : s.polar_bits[pick[b]];
    for (int k = 0; k < classes; ++k) {
      float* dst = y.data() + ((b * classes + k) * cells);
      for (size_t i = 0; i < cells; ++i) dst[i] = synth::get_bit(bits, k * stride, i) ? 1.0f : 0.0f;
    }
  }
  return y;
}

Tensor images_batch(const TrainSamples& s, const std::vector<int>& pick,
                    const geometry::CameraModel& cam, const PreprocSpec& spec) {
  Tensor x({static_cast<int>(pick.size()), 3, spec.crop_h, spec.resize_w});
  for (size_t b = 0; b < pick.size(); ++b) {
    ImageU8 img(cam.image_height, cam.image_width);
    img.data = s.images[pick[b]];
    const Tensor one = preprocess(img, spec);
    std::copy(one.data(), one.data() + one.numel(),
              x.data() + static_cast<int64_t>(b) * one.numel());
  }
  return x;
}

namespace {

struct BatchPlan {
  std::vector<std::vector<int>> batches;
};

BatchPlan plan_batches(int n, int batch, Rng* shuffle_rng) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  if (shuffle_rng) {
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(shuffle_rng->uniform_int(static_cast<uint64_t>(i) + 1));
      std::swap(idx[i], idx[j]);
    }
  }
  BatchPlan plan;
  if (n <= batch) {
    plan.batches.push_back(idx);
    return plan;
  }
  const int steps = n / batch;  // drop the ragged tail to keep batch stats stable
  for (int s = 0; s < steps; ++s)
    plan.batches.emplace_back(idx.begin() + static_cast<int64_t>(s) * batch,
                              idx.begin() + static_cast<int64_t>(s + 1) * batch);
  return plan;
}

json meta_base(const ExperimentConfig& cfg, const std::string& stage) {
  json m;
  m["stage"] = stage;
  m["config"] = json::parse(cfg.to_json(false));
  return m;
}

void attach_hashes(json& meta, const std::map<std::string, Tensor>& tensors) {
  for (const char* p : {"encoder.", "decoder.", "backbone.", "transformer.", "head."})
    meta[std::string("hash_") + std::string(p).substr(0, strlen(p) - 1)] =
        hex64(nn::hash_tensors(tensors, p));
}

void abort_non_finite(const std::string& stage, const std::map<std::string, Tensor>& tensors,
                      const ExperimentConfig& cfg, int64_t epoch, int64_t step) {
  Checkpoint diag;
  diag.stage = stage;
  diag.config_hash = cfg.hash();
  diag.epoch = epoch;
  diag.step = step;
  diag.tensors = tensors;
  diag.meta_json = "{\"diagnostic\":\"non-finite loss\"}";
  const std::string path = "diag_" + stage + ".ckpt";
  diag.save(path);
  throw TrainingError("stage " + stage + ": non-finite loss at step " + std::to_string(step) +
                      "; diagnostic snapshot written to " + path);
}

std::string rng_states_json(const Rng& order, const Rng& noise) {
  json j;
  j["order"] = order.save_state();
  j["noise"] = noise.save_state();
  return j.dump();
}

}  // namespace

StageResult train_stage1(const TrainData& data, const ExperimentConfig& cfg,
                         const Checkpoint* resume, std::ostream* log) {
  cfg.validate();
  const int K = data.num_classes();
  const int pr = cfg.polar.range_bins, pc = cfg.polar.azimuth_bins;
  const bool raster_targets = !cfg.ablate.cst;

  BevAutoencoder ae(K, cfg.model.latent_channels, cfg.model.encoder_channels);
  Rng init_rng = Rng(cfg.train.seed).derive(0xA101);
  ae.init(init_rng);

  const ClassWeights cw = compute_class_weights(
      raster_targets ? data.raster_freq : data.polar_freq, cfg.model.weight_clip_lo,
      cfg.model.weight_clip_hi);

  nn::ParamRefs params;
  ae.encoder.params(params);
  ae.decoder.params(params);
  nn::Optimizer opt(cfg.train.optimizer, cfg.train.weight_decay);
  opt.attach(params);

  const int ntrain = static_cast<int>(data.train.ids.size());
  require(ntrain >= 1, "stage1: empty train split");
  const int spe = std::max(1, ntrain >= cfg.train.batch_size ? ntrain / cfg.train.batch_size : 1);
  nn::LrSchedule sched{cfg.train.lr_stage1,
                       static_cast<int64_t>(std::llround(cfg.train.warmup_frac * cfg.train.epochs_stage1 * spe)),
                       static_cast<int64_t>(cfg.train.epochs_stage1) * spe, cfg.train.cosine};

  Rng order_rng = Rng(cfg.train.seed).derive(0xA102);
  Rng noise_rng = Rng(cfg.train.seed).derive(0xA103);
  int start_epoch = 0;
  int64_t gstep = 0;
  if (resume) {
    require(resume->stage == nn::kStageAe, "stage1: resume checkpoint is not stage ae");
    require(resume->config_hash == cfg.hash(), "stage1: resume checkpoint config mismatch");
    NamedTensors named;
    ae.named_tensors(named);
    load_named(named, resume->tensors);
    opt.import_state(resume->opt_state);
    const json js = json::parse(resume->rng_state);
    order_rng.load_state(js.at("order"));
    noise_rng.load_state(js.at("noise"));
    start_epoch = static_cast<int>(resume->epoch);
    gstep = resume->step;
  }

  StageResult out;
  for (int epoch = start_epoch; epoch < cfg.train.epochs_stage1; ++epoch) {
    ae.set_train(true);
    const BatchPlan plan = plan_batches(ntrain, cfg.train.batch_size, &order_rng);
    double epoch_loss = 0;
    for (const auto& pick : plan.batches) {
      const Tensor y = targets_batch(data.train, pick, raster_targets, K, pr, pc);
      const Tensor z = ae.encoder.forward(y);
      const Tensor zt = corrupt(z, cfg.model.eta, noise_rng);
      const Tensor yh = ae.decoder.forward(zt);
      Tensor dyh;
      const double loss = nn::weighted_bce(yh, y, cw.w, &dyh);
      if (!std::isfinite(loss)) {
        NamedTensors named;
        ae.named_tensors(named);
        std::map<std::string, Tensor> snap;
        store_named(named, snap);
        abort_non_finite(nn::kStageAe, snap, cfg, epoch, gstep);
      }
      nn::zero_grads(params);
      Tensor dz = ae.decoder.backward(dyh);
      const float a = static_cast<float>(std::sqrt(1.0 - cfg.model.eta));
      for (int64_t i = 0; i < dz.numel(); ++i) dz[i] *= a;
      ae.encoder.backward(dz);
      opt.step(sched.at(gstep));
      ++gstep;
      epoch_loss += loss;
    }
    out.train_losses.push_back(epoch_loss / static_cast<double>(plan.batches.size()));

    ae.set_train(false);
    Rng val_noise = Rng(cfg.train.seed).derive(0xA104);
    double val_loss = 0;
    int val_batches = 0;
    if (!data.val.ids.empty()) {
      const BatchPlan vplan = plan_batches(static_cast<int>(data.val.ids.size()),
                                           cfg.train.batch_size, nullptr);
      for (const auto& pick : vplan.batches) {
        const Tensor y = targets_batch(data.val, pick, raster_targets, K, pr, pc);
        const Tensor z = ae.encoder.forward(y);
        const Tensor zt = corrupt(z, cfg.model.eta, val_noise);
        const Tensor yh = ae.decoder.forward(zt);
        val_loss += nn::weighted_bce(yh, y, cw.w, nullptr);
        ++val_batches;
      }
    }
    out.val_losses.push_back(val_batches ? val_loss / val_batches : 0.0);
    if (log)
      *log << "[stage1] epoch " << epoch + 1 << "/" << cfg.train.epochs_stage1 << " train "
           << out.train_losses.back() << " val " << out.val_losses.back() << "\n";
  }

  Checkpoint ck;
  ck.stage = nn::kStageAe;
  ck.config_hash = cfg.hash();
  ck.epoch = cfg.train.epochs_stage1;
  ck.step = gstep;
  ck.rng_state = rng_states_json(order_rng, noise_rng);
  NamedTensors named;
  ae.named_tensors(named);
  store_named(named, ck.tensors);
  opt.export_state(ck.opt_state);
  json meta = meta_base(cfg, nn::kStageAe);
  meta["train_losses"] = out.train_losses;
  meta["val_losses"] = out.val_losses;
  meta["class_weights"] = cw.w;
  attach_hashes(meta, ck.tensors);
  ck.meta_json = meta.dump();
  out.ckpt = std::move(ck);
  return out;
}

namespace {

// frozen-encoder latents for a whole split, batched
Tensor encode_targets(BevEncoder& enc, const TrainSamples& s, const ExperimentConfig& cfg, int K,
                      bool raster) {
  const int n = static_cast<int>(s.ids.size());
  const int pr = cfg.polar.range_bins, pc = cfg.polar.azimuth_bins;
  Tensor all({std::max(1, n), cfg.model.latent_channels, pr / 8, pc / 8});
  const BatchPlan plan = plan_batches(n, cfg.train.batch_size, nullptr);
  int64_t written = 0;
  for (const auto& pick : plan.batches) {
    const Tensor y = targets_batch(s, pick, raster, K, pr, pc);
    const Tensor z = enc.forward(y);
    std::copy(z.data(), z.data() + z.numel(), all.data() + written);
    written += z.numel();
  }
  return all;
}

Tensor slice_batch(const Tensor& all, const std::vector<int>& pick) {
  const int64_t stride = all.numel() / all.dim(0);
  std::vector<int> shape = all.shape();
  shape[0] = static_cast<int>(pick.size());
  Tensor out(shape);
  for (size_t b = 0; b < pick.size(); ++b)
    std::copy(all.data() + pick[b] * stride, all.data() + (pick[b] + 1) * stride,
              out.data() + static_cast<int64_t>(b) * stride);
  return out;
}

}  // namespace

StageResult train_stage2(const TrainData& data, const ExperimentConfig& cfg, const Checkpoint& ae,
                         std::ostream* log) {
  cfg.validate();
  require(ae.stage == nn::kStageAe, "stage2: expected a stage-ae checkpoint, got " + ae.stage);
  const int K = data.num_classes();
  const bool raster_targets = !cfg.ablate.cst;

  BevEncoder enc(K, cfg.model.latent_channels, cfg.model.encoder_channels);
  {
    NamedTensors named;
    enc.named_tensors(named);
    load_named(named, ae.tensors);
  }
  enc.set_train(false);
  enc.set_frozen(true);

  const Tensor z_train = encode_targets(enc, data.train, cfg, K, raster_targets);
  const Tensor z_val = data.val.ids.empty()
                           ? Tensor()
                           : encode_targets(enc, data.val, cfg, K, raster_targets);

  AlignmentPipeline pipe(cfg.pipeline_shape());
  Rng init_rng = Rng(cfg.train.seed).derive(0xA201);
  pipe.init(init_rng);

  nn::ParamRefs params;
  pipe.params(params);
  nn::Optimizer opt(cfg.train.optimizer, cfg.train.weight_decay);
  opt.attach(params);

  const int ntrain = static_cast<int>(data.train.ids.size());
  const int spe = std::max(1, ntrain >= cfg.train.batch_size ? ntrain / cfg.train.batch_size : 1);
  nn::LrSchedule sched{cfg.train.lr_stage2,
                       static_cast<int64_t>(std::llround(cfg.train.warmup_frac * cfg.train.epochs_stage2 * spe)),
                       static_cast<int64_t>(cfg.train.epochs_stage2) * spe, cfg.train.cosine};
  Rng order_rng = Rng(cfg.train.seed).derive(0xA202);

  StageResult out;
  int64_t gstep = 0;
  for (int epoch = 0; epoch < cfg.train.epochs_stage2; ++epoch) {
    pipe.set_train(true);
    const BatchPlan plan = plan_batches(ntrain, cfg.train.batch_size, &order_rng);
    double epoch_loss = 0;
    for (const auto& pick : plan.batches) {
      const Tensor x = images_batch(data.train, pick, data.camera, cfg.preproc);
      const Tensor zh = pipe.forward(x);
      const Tensor z = slice_batch(z_train, pick);
      Tensor dzh;
      const double loss = nn::mse(zh, z, &dzh);
      if (!std::isfinite(loss)) {
        NamedTensors named;
        pipe.named_tensors(named);
        std::map<std::string, Tensor> snap;
        store_named(named, snap);
        abort_non_finite(nn::kStageAlign, snap, cfg, epoch, gstep);
      }
      nn::zero_grads(params);
      pipe.backward(dzh);
      opt.step(sched.at(gstep));
      ++gstep;
      epoch_loss += loss;
    }
    out.train_losses.push_back(epoch_loss / static_cast<double>(plan.batches.size()));

    pipe.set_train(false);
    double val_loss = 0;
    int vb = 0;
    if (!data.val.ids.empty()) {
      const BatchPlan vplan = plan_batches(static_cast<int>(data.val.ids.size()),
                                           cfg.train.batch_size, nullptr);
      for (const auto& pick : vplan.batches) {
        const Tensor x = images_batch(data.val, pick, data.camera, cfg.preproc);
        const Tensor zh = pipe.forward(x);
        val_loss += nn::mse(zh, slice_batch(z_val, pick), nullptr);
        ++vb;
      }
    }
    out.val_losses.push_back(vb ? val_loss / vb : 0.0);
    if (log)
      *log << "[stage2] epoch " << epoch + 1 << "/" << cfg.train.epochs_stage2 << " train "
           << out.train_losses.back() << " val " << out.val_losses.back() << "\n";
  }

  Checkpoint ck;
  ck.stage = nn::kStageAlign;
  ck.config_hash = cfg.hash();
  ck.epoch = cfg.train.epochs_stage2;
  ck.step = gstep;
  ck.rng_state = rng_states_json(order_rng, order_rng);
  ck.tensors = ae.tensors;  // verbatim: the autoencoder is frozen in this stage
  NamedTensors named;
  pipe.named_tensors(named);
  store_named(named, ck.tensors);
  opt.export_state(ck.opt_state);
  json meta = meta_base(cfg, nn::kStageAlign);
  meta["train_losses"] = out.train_losses;
  meta["val_losses"] = out.val_losses;
  attach_hashes(meta, ck.tensors);
  ck.meta_json = meta.dump();
  out.ckpt = std::move(ck);
  return out;
}

StageResult train_stage3(const TrainData& data, const ExperimentConfig& cfg,
                         const Checkpoint& align, std::ostream* log) {
  cfg.validate();
  require(align.stage == nn::kStageAlign,
          "stage3: expected a stage-align checkpoint, got " + align.stage);
  const int K = data.num_classes();
  const int pr = cfg.polar.range_bins, pc = cfg.polar.azimuth_bins;
  const bool raster_targets = !cfg.ablate.cst;

  AlignmentPipeline pipe(cfg.pipeline_shape());
  BevDecoder dec(K, cfg.model.latent_channels, cfg.model.encoder_channels);
  {
    NamedTensors named;
    pipe.named_tensors(named);
    load_named(named, align.tensors);
    named.clear();
    dec.named_tensors(named);
    load_named(named, align.tensors);
  }
  pipe.set_train(false);
  pipe.set_frozen(true);

  // the pipeline is frozen, so its latents are fixed; compute them once
  auto predict_latents = [&](const TrainSamples& s) {
    const int n = static_cast<int>(s.ids.size());
    Tensor all({std::max(1, n), cfg.model.latent_channels, pr / 8, pc / 8});
    int64_t written = 0;
    const BatchPlan plan = plan_batches(n, cfg.train.batch_size, nullptr);
    for (const auto& pick : plan.batches) {
      const Tensor x = images_batch(s, pick, data.camera, cfg.preproc);
      const Tensor zh = pipe.forward(x);
      std::copy(zh.data(), zh.data() + zh.numel(), all.data() + written);
      written += zh.numel();
    }
    return all;
  };
  const Tensor zh_train = predict_latents(data.train);
  const Tensor zh_val = data.val.ids.empty() ? Tensor() : predict_latents(data.val);

  const ClassWeights cw = compute_class_weights(
      raster_targets ? data.raster_freq : data.polar_freq, cfg.model.weight_clip_lo,
      cfg.model.weight_clip_hi);

  nn::ParamRefs params;
  dec.params(params);
  nn::Optimizer opt(cfg.train.optimizer, cfg.train.weight_decay);
  opt.attach(params);

  const int ntrain = static_cast<int>(data.train.ids.size());
  const int spe = std::max(1, ntrain >= cfg.train.batch_size ? ntrain / cfg.train.batch_size : 1);
  nn::LrSchedule sched{cfg.train.lr_stage3,
                       static_cast<int64_t>(std::llround(cfg.train.warmup_frac * cfg.train.epochs_stage3 * spe)),
                       static_cast<int64_t>(cfg.train.epochs_stage3) * spe, cfg.train.cosine};
  Rng order_rng = Rng(cfg.train.seed).derive(0xA302);

  StageResult out;
  int64_t gstep = 0;
  for (int epoch = 0; epoch < cfg.train.epochs_stage3; ++epoch) {
    dec.set_train(true);
    const BatchPlan plan = plan_batches(ntrain, cfg.train.batch_size, &order_rng);
    double epoch_loss = 0;
    for (const auto& pick : plan.batches) {
      const Tensor zh = slice_batch(zh_train, pick);
      const Tensor y = targets_batch(data.train, pick, raster_targets, K, pr, pc);
      const Tensor yh = dec.forward(zh);
      Tensor dyh;
      const double loss = nn::weighted_bce(yh, y, cw.w, &dyh);
      if (!std::isfinite(loss)) {
        NamedTensors named;
        dec.named_tensors(named);
        std::map<std::string, Tensor> snap;
        store_named(named, snap);
        abort_non_finite(nn::kStageFinetune, snap, cfg, epoch, gstep);
      }
      nn::zero_grads(params);
      dec.backward(dyh);
      opt.step(sched.at(gstep));
      ++gstep;
      epoch_loss += loss;
    }
    out.train_losses.push_back(epoch_loss / static_cast<double>(plan.batches.size()));

    dec.set_train(false);
    double val_loss = 0;
    int vb = 0;
    if (!data.val.ids.empty()) {
      const BatchPlan vplan = plan_batches(static_cast<int>(data.val.ids.size()),
                                           cfg.train.batch_size, nullptr);
      for (const auto& pick : vplan.batches) {
        const Tensor yh = dec.forward(slice_batch(zh_val, pick));
        const Tensor y = targets_batch(data.val, pick, raster_targets, K, pr, pc);
        val_loss += nn::weighted_bce(yh, y, cw.w, nullptr);
        ++vb;
      }
    }
    out.val_losses.push_back(vb ? val_loss / vb : 0.0);
    if (log)
      *log << "[stage3] epoch " << epoch + 1 << "/" << cfg.train.epochs_stage3 << " train "
           << out.train_losses.back() << " val " << out.val_losses.back() << "\n";
  }

  Checkpoint ck;
  ck.stage = nn::kStageFinetune;
  ck.config_hash = cfg.hash();
  ck.epoch = cfg.train.epochs_stage3;
  ck.step = gstep;
  ck.rng_state = rng_states_json(order_rng, order_rng);
  ck.tensors = align.tensors;  // everything but the decoder stays bit-identical
  NamedTensors named;
  dec.named_tensors(named);
  store_named(named, ck.tensors);
  opt.export_state(ck.opt_state);
  json meta = meta_base(cfg, nn::kStageFinetune);
  meta["train_losses"] = out.train_losses;
  meta["val_losses"] = out.val_losses;
  meta["class_weights"] = cw.w;
  attach_hashes(meta, ck.tensors);
  ck.meta_json = meta.dump();
  out.ckpt = std::move(ck);
  return out;
}

StageResult train_joint(const TrainData& data, const ExperimentConfig& cfg, std::ostream* log) {
  cfg.validate();
  const int K = data.num_classes();
  const int pr = cfg.polar.range_bins, pc = cfg.polar.azimuth_bins;
  const bool raster_targets = !cfg.ablate.cst;

  AlignmentPipeline pipe(cfg.pipeline_shape());
  BevDecoder dec(K, cfg.model.latent_channels, cfg.model.encoder_channels);
  Rng init_rng = Rng(cfg.train.seed).derive(0xA401);
  pipe.init(init_rng);
  dec.init(init_rng);

  const ClassWeights cw = compute_class_weights(
      raster_targets ? data.raster_freq : data.polar_freq, cfg.model.weight_clip_lo,
      cfg.model.weight_clip_hi);

  nn::ParamRefs params;
  pipe.params(params);
  dec.params(params);
  nn::Optimizer opt(cfg.train.optimizer, cfg.train.weight_decay);
  opt.attach(params);

  const int ntrain = static_cast<int>(data.train.ids.size());
  const int spe = std::max(1, ntrain >= cfg.train.batch_size ? ntrain / cfg.train.batch_size : 1);
  nn::LrSchedule sched{cfg.train.lr_joint,
                       static_cast<int64_t>(std::llround(cfg.train.warmup_frac * cfg.train.epochs_joint * spe)),
                       static_cast<int64_t>(cfg.train.epochs_joint) * spe, cfg.train.cosine};
  Rng order_rng = Rng(cfg.train.seed).derive(0xA402);

  StageResult out;
  int64_t gstep = 0;
  for (int epoch = 0; epoch < cfg.train.epochs_joint; ++epoch) {
    pipe.set_train(true);
    dec.set_train(true);
    const BatchPlan plan = plan_batches(ntrain, cfg.train.batch_size, &order_rng);
    double epoch_loss = 0;
    for (const auto& pick : plan.batches) {
      const Tensor x = images_batch(data.train, pick, data.camera, cfg.preproc);
      const Tensor y = targets_batch(data.train, pick, raster_targets, K, pr, pc);
      const Tensor zh = pipe.forward(x);
      const Tensor yh = dec.forward(zh);
      Tensor dyh;
      const double loss = nn::weighted_bce(yh, y, cw.w, &dyh);
      if (!std::isfinite(loss)) {
        NamedTensors named;
        pipe.named_tensors(named);
        dec.named_tensors(named);
        std::map<std::string, Tensor> snap;
        store_named(named, snap);
        abort_non_finite(nn::kStageJoint, snap, cfg, epoch, gstep);
      }
      nn::zero_grads(params);
      const Tensor dzh = dec.backward(dyh);
      pipe.backward(dzh);
      opt.step(sched.at(gstep));
      ++gstep;
      epoch_loss += loss;
    }
    out.train_losses.push_back(epoch_loss / static_cast<double>(plan.batches.size()));

    pipe.set_train(false);
    dec.set_train(false);
    double val_loss = 0;
    int vb = 0;
    if (!data.val.ids.empty()) {
      const BatchPlan vplan = plan_batches(static_cast<int>(data.val.ids.size()),
                                           cfg.train.batch_size, nullptr);
      for (const auto& pick : vplan.batches) {
        const Tensor x = images_batch(data.val, pick, data.camera, cfg.preproc);
        const Tensor yh = dec.forward(pipe.forward(x));
        const Tensor y = targets_batch(data.val, pick, raster_targets, K, pr, pc);
        val_loss += nn::weighted_bce(yh, y, cw.w, nullptr);
        ++vb;
      }
    }
    out.val_losses.push_back(vb ? val_loss / vb : 0.0);
    if (log)
      *log << "[joint] epoch " << epoch + 1 << "/" << cfg.train.epochs_joint << " train "
           << out.train_losses.back() << " val " << out.val_losses.back() << "\n";
  }

  Checkpoint ck;
  ck.stage = nn::kStageJoint;
  ck.config_hash = cfg.hash();
  ck.epoch = cfg.train.epochs_joint;
  ck.step = gstep;
  ck.rng_state = rng_states_json(order_rng, order_rng);
  NamedTensors named;
  pipe.named_tensors(named);
  dec.named_tensors(named);
  store_named(named, ck.tensors);
  opt.export_state(ck.opt_state);
  json meta = meta_base(cfg, nn::kStageJoint);
  meta["train_losses"] = out.train_losses;
  meta["val_losses"] = out.val_losses;
  meta["class_weights"] = cw.w;
  attach_hashes(meta, ck.tensors);
  ck.meta_json = meta.dump();
  out.ckpt = std::move(ck);
  return out;
}

InferenceEngine::InferenceEngine(const Checkpoint& ckpt, const ExperimentConfig& cfg)
    : cfg_(cfg), pipe_(cfg.pipeline_shape()),
      dec_(cfg.num_classes(), cfg.model.latent_channels, cfg.model.encoder_channels),
      warper_(cfg.grid, cfg.polar, cfg.camera) {
  require(ckpt.stage == nn::kStageAlign || ckpt.stage == nn::kStageFinetune ||
              ckpt.stage == nn::kStageJoint,
          "inference: checkpoint stage '" + ckpt.stage + "' is not decodable");
  NamedTensors named;
  pipe_.named_tensors(named);
  load_named(named, ckpt.tensors);
  named.clear();
  dec_.named_tensors(named);
  load_named(named, ckpt.tensors);
  pipe_.set_train(false);
  dec_.set_train(false);
}

geometry::BevMap InferenceEngine::run(const ImageU8& image) {
  const Tensor one = preprocess(image, cfg_.preproc);
  Tensor x({1, 3, one.dim(1), one.dim(2)});
  std::copy(one.data(), one.data() + one.numel(), x.data());
  const Tensor yh = dec_.forward(pipe_.forward(x));
  const int K = cfg_.num_classes();
  const int pr = cfg_.polar.range_bins, pc = cfg_.polar.azimuth_bins;
  if (cfg_.ablate.cst) {
    geometry::PolarBevMap pm(cfg_.polar, K);
    std::copy(yh.data(), yh.data() + yh.numel(), pm.data.data());
    const auto kernel = cfg_.model.prediction_warp == "bilinear" ? geometry::WarpKernel::Bilinear
                                                                 : geometry::WarpKernel::Nearest;
    return warper_.polar_to_cart(pm, kernel);
  }
  geometry::BevMap out(cfg_.grid, K);
  for (int k = 0; k < K; ++k)
    geometry::resample_plane_nearest(yh.data() + static_cast<int64_t>(k) * pr * pc, pr, pc,
                                     out.channel(k), cfg_.grid.rows, cfg_.grid.cols);
  return out;
}

geometry::BevMap infer_image(const ImageU8& image, const Checkpoint& ckpt,
                             const ExperimentConfig& cfg) {
  InferenceEngine engine(ckpt, cfg);
  return engine.run(image);
}

eval::EvalReport evaluate_split(const TrainData& data, bool val_split, const Checkpoint& ckpt,
                                const ExperimentConfig& cfg, bool use_visibility) {
  const TrainSamples& s = val_split ? data.val : data.train;
  InferenceEngine engine(ckpt, cfg);
  eval::EvalConfig ecfg = cfg.eval;
  ecfg.use_visibility = use_visibility;
  eval::Evaluator ev(data.grid, data.num_classes(), data.manifest.class_names, ecfg);
  const size_t cells = static_cast<size_t>(data.grid.rows) * data.grid.cols;
  const size_t stride = synth::plane_stride_bytes(cells);
  const int K = data.num_classes();
  for (size_t i = 0; i < s.ids.size(); ++i) {
    ImageU8 img(data.camera.image_height, data.camera.image_width);
    img.data = s.images[i];
    const geometry::BevMap pred = engine.run(img);
    std::vector<uint8_t> gt(cells * K, 0);
    for (int k = 0; k < K; ++k)
      for (size_t j = 0; j < cells; ++j)
        gt[k * cells + j] = synth::get_bit(s.cart_bits[i], k * stride, j);
    std::vector<uint8_t> vis(cells, 1);
    if (use_visibility)
      for (size_t j = 0; j < cells; ++j) vis[j] = synth::get_bit(s.vis_bits[i], 0, j);
    ev.add(pred, gt, vis);
  }
  return ev.finalize();
}

double ae_reconstruction_miou(const TrainData& data, bool val_split, const Checkpoint& ae,
                              const ExperimentConfig& cfg, double threshold, double eta) {
  require(ae.stage == nn::kStageAe, "ae_reconstruction_miou: need a stage-ae checkpoint");
  const TrainSamples& s = val_split ? data.val : data.train;
  const int K = data.num_classes();
  const int pr = cfg.polar.range_bins, pc = cfg.polar.azimuth_bins;
  const bool raster_targets = !cfg.ablate.cst;

  BevAutoencoder net(K, cfg.model.latent_channels, cfg.model.encoder_channels);
  NamedTensors named;
  net.named_tensors(named);
  load_named(named, ae.tensors);
  net.set_train(false);

  std::vector<int64_t> inter(K, 0), uni(K, 0);
  const BatchPlan plan = plan_batches(static_cast<int>(s.ids.size()), cfg.train.batch_size,
                                      nullptr);
  const float tau = static_cast<float>(threshold);
  for (const auto& pick : plan.batches) {
    const Tensor y = targets_batch(s, pick, raster_targets, K, pr, pc);
    const Tensor z = net.encoder.forward(y);
    Rng noise = Rng(cfg.train.seed).derive(Rng::mix(0xAE0E, s.ids[pick[0]]));
    const Tensor zt = corrupt(z, eta, noise);
    const Tensor yh = net.decoder.forward(zt);
    const int64_t cells = static_cast<int64_t>(pr) * pc;
    for (size_t b = 0; b < pick.size(); ++b)
      for (int k = 0; k < K; ++k) {
        const float* ph = yh.data() + ((static_cast<int64_t>(b) * K + k) * cells);
        const float* py = y.data() + ((static_cast<int64_t>(b) * K + k) * cells);
        for (int64_t j = 0; j < cells; ++j) {
          const bool p = ph[j] >= tau, g = py[j] != 0.0f;
          inter[k] += (p && g);
          uni[k] += (p || g);
        }
      }
  }
  double miou = 0;
  for (int k = 0; k < K; ++k)
    miou += uni[k] == 0 ? 1.0 : static_cast<double>(inter[k]) / static_cast<double>(uni[k]);
  return miou / K;
}

}  // namespace bevseg::model
