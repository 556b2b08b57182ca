// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bevseg/geometry/grid.hpp"

namespace bevseg::eval {

struct EvalConfig {
  std::vector<double> thresholds;  // defaults to 0.05 .. 0.95 step 0.05
  double bin_width_m = 5.0;
  bool use_visibility = true;
  // ordered class groupings reported alongside per-class numbers
  std::vector<std::pair<std::string, std::vector<std::string>>> strata;

  static EvalConfig defaults();
};

// Binary IoU of {pred >= tau} against gt, restricted to valid cells.
// Both sets empty -> 1 (flagged by callers), exactly one empty -> 0.
double iou(const std::vector<float>& pred, const std::vector<float>& gt,
           const std::vector<uint8_t>& valid, double threshold);

// Max IoU over a threshold grid; ties resolve to the lowest threshold.
std::pair<double, double> best_iou(const std::vector<float>& pred, const std::vector<float>& gt,
                                   const std::vector<uint8_t>& valid,
                                   const std::vector<double>& thresholds);

struct EvalReport {
  int num_samples = 0;
  bool visibility_used = true;
  std::vector<std::string> class_names;
  std::vector<double> per_class_iou;
  std::vector<double> best_threshold;
  std::vector<uint8_t> class_empty;  // gt support empty over the whole split
  double mean_iou = 0.0;
  std::vector<std::pair<std::string, double>> stratum_iou;

  struct DistanceBin {
    double r0 = 0, r1 = 0;
    std::vector<double> per_class_iou;
    std::vector<uint8_t> class_empty;
    double mean_iou = 0.0;
    std::vector<std::pair<std::string, double>> stratum_iou;
  };
  std::vector<DistanceBin> bins;

  std::string to_json() const;
  static EvalReport from_json(const std::string& text);
  std::string to_markdown() const;
};

// Pools intersections/unions over a whole split (dataset-level protocol),
// then maximizes over the threshold grid once at the end.
class Evaluator {
 public:
  Evaluator(const geometry::GridSpec& grid, int num_classes,
            std::vector<std::string> class_names, EvalConfig cfg);

  // pred: soft Cartesian map; gt/visibility: per-cell {0,1} planes, gt has
  // num_classes planes. Passing an all-ones visibility equals no masking.
  void add(const geometry::BevMap& pred, const std::vector<uint8_t>& gt,
           const std::vector<uint8_t>& visibility);

  EvalReport finalize() const;
  int num_samples() const { return num_samples_; }

 private:
  geometry::GridSpec grid_;
  int num_classes_;
  std::vector<std::string> class_names_;
  EvalConfig cfg_;
  int num_bins_;
  std::vector<int16_t> cell_bin_;  // distance-annulus index per cell, -1 beyond
  int num_samples_ = 0;
  // histogram over threshold buckets, per (class, bin+global); bucket b means
  // "largest threshold <= value is thresholds[b]", bucket T = below all
  std::vector<int64_t> hist_gt_, hist_bg_;
  std::vector<int64_t> gt_total_, valid_total_;
  int64_t& hg(int k, int bin, int bucket);
  int64_t& hb(int k, int bin, int bucket);
};

// Expected best-threshold IoU of a constant-probability predictor against a
// class of the given frequency; the analytic floor used to sanity-check
// untrained models. With the pooled protocol an untrained net's best
// threshold degenerates to all-or-nothing, giving max(freq, 0).
double random_baseline_iou(double class_frequency);

// Largest-deviation count above the non-increasing isotonic fit (PAVA).
// Used by the distance-curve monotonicity check.
std::vector<double> isotonic_non_increasing(const std::vector<double>& v);

}  // namespace bevseg::eval
