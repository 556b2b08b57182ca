// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>

#include "bevseg/core/image.hpp"
#include "bevseg/eval/metrics.hpp"

namespace bevseg::eval {

// Per-class IoU bars (mean appended).
void render_class_bars(const EvalReport& rep, const std::string& png_path);

// Stratum mIoU against distance, one line per stratum plus the mean.
void render_distance_curves(const EvalReport& rep, const std::string& png_path);

// Camera image | prediction | (optional) ground truth, BEV maps drawn with the
// renderer's class palette, camera at the bottom edge looking up.
void render_prediction_overlay(const ImageU8& image, const geometry::BevMap& pred,
                               const geometry::BevMap* gt,
                               const std::vector<std::string>& class_names, double threshold,
                               const std::string& png_path);

}  // namespace bevseg::eval
