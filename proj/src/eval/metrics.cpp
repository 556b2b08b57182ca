// SPDX-License-Identifier: Apache-2.0
#include "bevseg/eval/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace bevseg::eval {

using nlohmann::json;

EvalConfig EvalConfig::defaults() {
  EvalConfig c;
  for (int i = 1; i <= 19; ++i) c.thresholds.push_back(i * 0.05);
  c.strata = {
      {"layout", {"drivable", "crossing", "walkway"}},
      {"large", {"car", "truck"}},
      {"small", {"pedestrian"}},
  };
  return c;
}

double iou(const std::vector<float>& pred, const std::vector<float>& gt,
           const std::vector<uint8_t>& valid, double threshold) {
  require(pred.size() == gt.size() && pred.size() == valid.size(), "iou: size mismatch");
  require(threshold > 0 && threshold < 1, "iou: threshold must be in (0,1)");
  int64_t inter = 0, uni = 0;
  const float tau = static_cast<float>(threshold);
  for (size_t i = 0; i < pred.size(); ++i) {
    if (!valid[i]) continue;
    const bool p = pred[i] >= tau;
    const bool g = gt[i] != 0.0f;
    inter += (p && g);
    uni += (p || g);
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::pair<double, double> best_iou(const std::vector<float>& pred, const std::vector<float>& gt,
                                   const std::vector<uint8_t>& valid,
                                   const std::vector<double>& thresholds) {
  require(!thresholds.empty(), "best_iou: empty threshold grid");
  double best = -1.0, best_tau = thresholds.front();
  for (double tau : thresholds) {
    const double v = iou(pred, gt, valid, tau);
    if (v > best) {
      best = v;
      best_tau = tau;
    }
  }
  return {best, best_tau};
}

Evaluator::Evaluator(const geometry::GridSpec& grid, int num_classes,
                     std::vector<std::string> class_names, EvalConfig cfg)
    : grid_(grid), num_classes_(num_classes), class_names_(std::move(class_names)),
      cfg_(std::move(cfg)) {
  require(num_classes_ >= 1, "Evaluator: need at least one class");
  require(static_cast<int>(class_names_.size()) == num_classes_, "Evaluator: class name count");
  require(!cfg_.thresholds.empty(), "Evaluator: empty threshold grid");
  require(std::is_sorted(cfg_.thresholds.begin(), cfg_.thresholds.end()),
          "Evaluator: thresholds must be ascending");

  const double max_r = std::max(std::hypot(grid_.x_min, std::max(std::abs(grid_.y_min), grid_.y_max)),
                                std::hypot(grid_.x_max, std::max(std::abs(grid_.y_min), grid_.y_max)));
  num_bins_ = static_cast<int>(std::ceil(max_r / cfg_.bin_width_m));
  cell_bin_.assign(static_cast<size_t>(grid_.rows) * grid_.cols, -1);
  for (int r = 0; r < grid_.rows; ++r)
    for (int c = 0; c < grid_.cols; ++c) {
      const double rad = std::hypot(grid_.x_of_row(r), grid_.y_of_col(c));
      int b = static_cast<int>(rad / cfg_.bin_width_m);
      if (b >= num_bins_) b = num_bins_ - 1;
      cell_bin_[static_cast<size_t>(r) * grid_.cols + c] = static_cast<int16_t>(b);
    }

  const size_t T = cfg_.thresholds.size() + 1;  // +1 bucket for "below all"
  const size_t slots = static_cast<size_t>(num_classes_) * (num_bins_ + 1) * T;
  hist_gt_.assign(slots, 0);
  hist_bg_.assign(slots, 0);
  gt_total_.assign(static_cast<size_t>(num_classes_) * (num_bins_ + 1), 0);
  valid_total_.assign(num_bins_ + 1, 0);
}

int64_t& Evaluator::hg(int k, int bin, int bucket) {
  const size_t T = cfg_.thresholds.size() + 1;
  return hist_gt_[(static_cast<size_t>(k) * (num_bins_ + 1) + bin) * T + bucket];
}
int64_t& Evaluator::hb(int k, int bin, int bucket) {
  const size_t T = cfg_.thresholds.size() + 1;
  return hist_bg_[(static_cast<size_t>(k) * (num_bins_ + 1) + bin) * T + bucket];
}

void Evaluator::add(const geometry::BevMap& pred, const std::vector<uint8_t>& gt,
                    const std::vector<uint8_t>& visibility) {
  require(pred.spec == grid_ && pred.num_classes == num_classes_, "Evaluator: pred mismatch");
  const size_t cells = pred.cells();
  require(gt.size() == cells * num_classes_, "Evaluator: gt size");
  require(visibility.size() == cells, "Evaluator: visibility size");

  const int T = static_cast<int>(cfg_.thresholds.size());
  // bucket(v) = index of the largest threshold <= v, or T when below all.
  // Buckets let one pass over cells serve every threshold at finalize time.
  auto bucket_of = [&](float v) {
    int b = T;  // T = below every threshold
    for (int t = 0; t < T; ++t) {
      if (v >= cfg_.thresholds[t]) b = t;
      else break;
    }
    return b;
  };

  for (int k = 0; k < num_classes_; ++k) {
    const float* p = pred.channel(k);
    const uint8_t* g = gt.data() + static_cast<size_t>(k) * cells;
    for (size_t i = 0; i < cells; ++i) {
      if (!visibility[i]) continue;
      const int bin = cell_bin_[i];
      const int b = bucket_of(p[i]);
      if (g[i]) {
        ++hg(k, 0, b);
        ++hg(k, 1 + bin, b);
        ++gt_total_[static_cast<size_t>(k) * (num_bins_ + 1)];
        ++gt_total_[static_cast<size_t>(k) * (num_bins_ + 1) + 1 + bin];
      } else {
        ++hb(k, 0, b);
        ++hb(k, 1 + bin, b);
      }
      if (k == 0) {
        ++valid_total_[0];
        ++valid_total_[1 + bin];
      }
    }
  }
  ++num_samples_;
}

EvalReport Evaluator::finalize() const {
  EvalReport rep;
  rep.num_samples = num_samples_;
  rep.visibility_used = cfg_.use_visibility;
  rep.class_names = class_names_;
  const int T = static_cast<int>(cfg_.thresholds.size());

  auto slot = [&](const std::vector<int64_t>& h, int k, int bin, int b) {
    return h[(static_cast<size_t>(k) * (num_bins_ + 1) + bin) * (T + 1) + b];
  };
  // best-threshold IoU from pooled histograms for one (class, bin) slot
  auto best_for = [&](int k, int bin, double* best_tau, bool* empty) {
    int64_t pred_gt = 0, pred_bg = 0;  // cells with value >= current tau
    // suffix sums walking tau from high to low; track best with lowest-tau ties
    std::vector<double> iou_at(T, 0.0);
    const int64_t gt_n = gt_total_[static_cast<size_t>(k) * (num_bins_ + 1) + bin];
    for (int t = T - 1; t >= 0; --t) {
      pred_gt += slot(hist_gt_, k, bin, t);
      pred_bg += slot(hist_bg_, k, bin, t);
      const int64_t uni = pred_bg + gt_n;
      iou_at[t] = uni == 0 ? 1.0 : static_cast<double>(pred_gt) / static_cast<double>(uni);
    }
    double best = -1.0;
    double tau = cfg_.thresholds.front();
    for (int t = 0; t < T; ++t) {
      if (iou_at[t] > best) {
        best = iou_at[t];
        tau = cfg_.thresholds[t];
      }
    }
    if (best_tau) *best_tau = tau;
    if (empty) *empty = gt_n == 0;
    return best;
  };

  auto stratum_means = [&](const std::vector<double>& per_class) {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& [name, members] : cfg_.strata) {
      double s = 0;
      int n = 0;
      for (const auto& m : members) {
        auto it = std::find(class_names_.begin(), class_names_.end(), m);
        if (it == class_names_.end()) continue;
        s += per_class[it - class_names_.begin()];
        ++n;
      }
      if (n > 0) out.emplace_back(name, s / n);
    }
    return out;
  };

  rep.per_class_iou.resize(num_classes_);
  rep.best_threshold.resize(num_classes_);
  rep.class_empty.resize(num_classes_);
  double sum = 0;
  for (int k = 0; k < num_classes_; ++k) {
    bool empty = false;
    rep.per_class_iou[k] = best_for(k, 0, &rep.best_threshold[k], &empty);
    rep.class_empty[k] = empty;
    sum += rep.per_class_iou[k];
  }
  rep.mean_iou = sum / num_classes_;
  rep.stratum_iou = stratum_means(rep.per_class_iou);

  for (int bin = 0; bin < num_bins_; ++bin) {
    EvalReport::DistanceBin b;
    b.r0 = bin * cfg_.bin_width_m;
    b.r1 = (bin + 1) * cfg_.bin_width_m;
    if (valid_total_[1 + bin] == 0) continue;  // annulus entirely outside mask
    b.per_class_iou.resize(num_classes_);
    b.class_empty.resize(num_classes_);
    double s = 0;
    for (int k = 0; k < num_classes_; ++k) {
      bool empty = false;
      b.per_class_iou[k] = best_for(k, 1 + bin, nullptr, &empty);
      b.class_empty[k] = empty;
      s += b.per_class_iou[k];
    }
    b.mean_iou = s / num_classes_;
    b.stratum_iou = stratum_means(b.per_class_iou);
    rep.bins.push_back(std::move(b));
  }
  return rep;
}

double random_baseline_iou(double class_frequency) { return class_frequency; }

std::vector<double> isotonic_non_increasing(const std::vector<double>& v) {
  // PAVA on the reversed sequence (non-decreasing), then reverse back.
  const int n = static_cast<int>(v.size());
  std::vector<double> val;
  std::vector<int> cnt;
  for (int i = n - 1; i >= 0; --i) {
    val.push_back(v[i]);
    cnt.push_back(1);
    while (val.size() >= 2 && val[val.size() - 2] > val.back()) {
      const double merged =
          (val[val.size() - 2] * cnt[cnt.size() - 2] + val.back() * cnt.back()) /
          (cnt[cnt.size() - 2] + cnt.back());
      cnt[cnt.size() - 2] += cnt.back();
      val[val.size() - 2] = merged;
      val.pop_back();
      cnt.pop_back();
    }
  }
  std::vector<double> out;
  for (int b = static_cast<int>(val.size()) - 1; b >= 0; --b)
    for (int j = 0; j < cnt[b]; ++j) out.push_back(val[b]);
  return out;
}

namespace {

json strata_to_json(const std::vector<std::pair<std::string, double>>& s) {
  json j = json::object();
  for (const auto& [k, v] : s) j[k] = v;
  return j;
}

std::vector<std::pair<std::string, double>> strata_from_json(const json& j) {
  std::vector<std::pair<std::string, double>> out;
  for (auto it = j.begin(); it != j.end(); ++it) out.emplace_back(it.key(), it.value().get<double>());
  return out;
}

}  // namespace

std::string EvalReport::to_json() const {
  json j;
  j["num_samples"] = num_samples;
  j["visibility_used"] = visibility_used;
  j["class_names"] = class_names;
  j["per_class_iou"] = per_class_iou;
  j["best_threshold"] = best_threshold;
  j["class_empty"] = class_empty;
  j["mean_iou"] = mean_iou;
  j["stratum_iou"] = strata_to_json(stratum_iou);
  j["distance_bins"] = json::array();
  for (const auto& b : bins) {
    json jb;
    jb["r0"] = b.r0;
    jb["r1"] = b.r1;
    jb["per_class_iou"] = b.per_class_iou;
    jb["class_empty"] = b.class_empty;
    jb["mean_iou"] = b.mean_iou;
    jb["stratum_iou"] = strata_to_json(b.stratum_iou);
    j["distance_bins"].push_back(jb);
  }
  return j.dump(2);
}

EvalReport EvalReport::from_json(const std::string& text) {
  const json j = json::parse(text);
  EvalReport r;
  r.num_samples = j.at("num_samples").get<int>();
  r.visibility_used = j.at("visibility_used").get<bool>();
  r.class_names = j.at("class_names").get<std::vector<std::string>>();
  r.per_class_iou = j.at("per_class_iou").get<std::vector<double>>();
  r.best_threshold = j.at("best_threshold").get<std::vector<double>>();
  r.class_empty = j.at("class_empty").get<std::vector<uint8_t>>();
  r.mean_iou = j.at("mean_iou").get<double>();
  r.stratum_iou = strata_from_json(j.at("stratum_iou"));
  for (const auto& jb : j.at("distance_bins")) {
    DistanceBin b;
    b.r0 = jb.at("r0").get<double>();
    b.r1 = jb.at("r1").get<double>();
    b.per_class_iou = jb.at("per_class_iou").get<std::vector<double>>();
    b.class_empty = jb.at("class_empty").get<std::vector<uint8_t>>();
    b.mean_iou = jb.at("mean_iou").get<double>();
    b.stratum_iou = strata_from_json(jb.at("stratum_iou"));
    r.bins.push_back(std::move(b));
  }
  return r;
}

std::string EvalReport::to_markdown() const {
  std::string s = "| class | IoU | best tau |\n|---|---|---|\n";
  char buf[128];
  for (size_t k = 0; k < class_names.size(); ++k) {
    snprintf(buf, sizeof buf, "| %s | %.4f%s | %.2f |\n", class_names[k].c_str(),
             per_class_iou[k], class_empty[k] ? " (empty)" : "", best_threshold[k]);
    s += buf;
  }
  snprintf(buf, sizeof buf, "| **mean** | %.4f | |\n", mean_iou);
  s += buf;
  for (const auto& [name, v] : stratum_iou) {
    snprintf(buf, sizeof buf, "| %s (stratum) | %.4f | |\n", name.c_str(), v);
    s += buf;
  }
  return s;
}

}  // namespace bevseg::eval
