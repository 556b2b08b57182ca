// SPDX-License-Identifier: Apache-2.0
#include "bevseg/eval/figures.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "bevseg/synth/scene.hpp"

namespace bevseg::eval {

namespace {

cv::Scalar bgr(const std::array<float, 3>& rgb) {
  return cv::Scalar(rgb[2] * 255, rgb[1] * 255, rgb[0] * 255);
}

void write(const cv::Mat& m, const std::string& path) {
  if (!cv::imwrite(path, m)) throw IoError("figures: cannot write " + path);
}

// BEV map to display raster: row 0 (near) at the bottom, classes painted in
// palette order so later (object) classes sit on top
cv::Mat bev_canvas(const geometry::BevMap& map, const std::vector<std::string>& names,
                   double threshold) {
  const int R = map.spec.rows, C = map.spec.cols;
  cv::Mat m(R, C, CV_8UC3, cv::Scalar(28, 28, 28));
  for (int k = 0; k < map.num_classes; ++k) {
    const auto col = bgr(synth::class_albedo(names[k]));
    for (int r = 0; r < R; ++r)
      for (int c = 0; c < C; ++c)
        if (map.at(k, r, c) >= threshold)
          m.at<cv::Vec3b>(R - 1 - r, c) =
              cv::Vec3b(static_cast<uint8_t>(col[0]), static_cast<uint8_t>(col[1]),
                        static_cast<uint8_t>(col[2]));
  }
  return m;
}

cv::Mat image_canvas(const ImageU8& img) {
  cv::Mat m(img.height, img.width, CV_8UC3);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      m.at<cv::Vec3b>(y, x) = cv::Vec3b(img.at(y, x, 2), img.at(y, x, 1), img.at(y, x, 0));
  return m;
}

}  // namespace

void render_class_bars(const EvalReport& rep, const std::string& png_path) {
  const int K = static_cast<int>(rep.class_names.size());
  const int W = 120 + K * 90 + 110, H = 420;
  cv::Mat m(H, W, CV_8UC3, cv::Scalar(255, 255, 255));
  const int base = H - 70, top = 40;
  cv::line(m, {80, base}, {W - 20, base}, cv::Scalar(0, 0, 0), 1);
  for (int g = 0; g <= 10; g += 2) {
    const int y = base - g * (base - top) / 10;
    cv::line(m, {75, y}, {80, y}, cv::Scalar(0, 0, 0), 1);
    cv::putText(m, cv::format("%.1f", g / 10.0), {30, y + 5}, cv::FONT_HERSHEY_SIMPLEX, 0.45,
                cv::Scalar(0, 0, 0), 1);
  }
  for (int k = 0; k <= K; ++k) {
    const bool is_mean = k == K;
    const double v = is_mean ? rep.mean_iou : rep.per_class_iou[k];
    const std::string label = is_mean ? "mean" : rep.class_names[k];
    const int x0 = 100 + k * 90;
    const int h = static_cast<int>(v * (base - top));
    const cv::Scalar col = is_mean ? cv::Scalar(60, 60, 60)
                                   : bgr(synth::class_albedo(rep.class_names[k]));
    cv::rectangle(m, {x0, base - h}, {x0 + 60, base}, col, cv::FILLED);
    cv::putText(m, label, {x0 - 5, base + 25}, cv::FONT_HERSHEY_SIMPLEX, 0.45,
                cv::Scalar(0, 0, 0), 1);
    cv::putText(m, cv::format("%.3f", v), {x0, base - h - 8}, cv::FONT_HERSHEY_SIMPLEX, 0.42,
                cv::Scalar(0, 0, 0), 1);
  }
  cv::putText(m, cv::format("IoU by class (best threshold, %d samples)", rep.num_samples),
              {80, 25}, cv::FONT_HERSHEY_SIMPLEX, 0.55, cv::Scalar(0, 0, 0), 1);
  write(m, png_path);
}

void render_distance_curves(const EvalReport& rep, const std::string& png_path) {
  const int W = 720, H = 460;
  cv::Mat m(H, W, CV_8UC3, cv::Scalar(255, 255, 255));
  const int x0 = 80, x1 = W - 30, base = H - 70, top = 40;
  cv::line(m, {x0, base}, {x1, base}, cv::Scalar(0, 0, 0), 1);
  cv::line(m, {x0, base}, {x0, top}, cv::Scalar(0, 0, 0), 1);
  const int nb = static_cast<int>(rep.bins.size());
  if (nb == 0) {
    write(m, png_path);
    return;
  }
  for (int g = 0; g <= 10; g += 2) {
    const int y = base - g * (base - top) / 10;
    cv::putText(m, cv::format("%.1f", g / 10.0), {35, y + 5}, cv::FONT_HERSHEY_SIMPLEX, 0.45,
                cv::Scalar(0, 0, 0), 1);
    cv::line(m, {x0 - 5, y}, {x0, y}, cv::Scalar(0, 0, 0), 1);
  }
  auto px = [&](int bin) { return x0 + (bin + 1) * (x1 - x0) / (nb + 1); };
  auto py = [&](double v) { return base - static_cast<int>(v * (base - top)); };
  for (int b = 0; b < nb; ++b)
    cv::putText(m, cv::format("%d-%d", static_cast<int>(rep.bins[b].r0),
                              static_cast<int>(rep.bins[b].r1)),
                {px(b) - 18, base + 22}, cv::FONT_HERSHEY_SIMPLEX, 0.38, cv::Scalar(0, 0, 0), 1);

  std::vector<std::pair<std::string, cv::Scalar>> series;
  for (size_t s = 0; s < rep.stratum_iou.size(); ++s) {
    static const cv::Scalar palette[] = {cv::Scalar(180, 120, 40), cv::Scalar(40, 90, 200),
                                         cv::Scalar(60, 160, 60), cv::Scalar(150, 60, 160)};
    series.emplace_back(rep.stratum_iou[s].first, palette[s % 4]);
  }
  series.emplace_back("mean", cv::Scalar(0, 0, 0));
  for (size_t s = 0; s < series.size(); ++s) {
    cv::Point prev;
    bool has_prev = false;
    for (int b = 0; b < nb; ++b) {
      double v = rep.bins[b].mean_iou;
      if (series[s].first != "mean") {
        v = 0;
        for (const auto& [name, sv] : rep.bins[b].stratum_iou)
          if (name == series[s].first) v = sv;
      }
      const cv::Point p(px(b), py(v));
      cv::circle(m, p, 3, series[s].second, cv::FILLED);
      if (has_prev) cv::line(m, prev, p, series[s].second, 2);
      prev = p;
      has_prev = true;
    }
    cv::putText(m, series[s].first, {x1 - 110, top + 22 * static_cast<int>(s) + 10},
                cv::FONT_HERSHEY_SIMPLEX, 0.5, series[s].second, 1);
  }
  cv::putText(m, "IoU over distance (5 m bins)", {x0, 25}, cv::FONT_HERSHEY_SIMPLEX, 0.55,
              cv::Scalar(0, 0, 0), 1);
  write(m, png_path);
}

void render_prediction_overlay(const ImageU8& image, const geometry::BevMap& pred,
                               const geometry::BevMap* gt,
                               const std::vector<std::string>& class_names, double threshold,
                               const std::string& png_path) {
  cv::Mat cam = image_canvas(image);
  cv::Mat pm = bev_canvas(pred, class_names, threshold);
  std::vector<cv::Mat> panels;
  const int target_h = std::max(cam.rows, pm.rows);
  auto fit = [&](cv::Mat src, const std::string& label) {
    cv::Mat scaled;
    const double sc = static_cast<double>(target_h) / src.rows;
    cv::resize(src, scaled, {}, sc, sc, cv::INTER_NEAREST);
    cv::putText(scaled, label, {8, 20}, cv::FONT_HERSHEY_SIMPLEX, 0.55, cv::Scalar(255, 255, 255),
                1);
    panels.push_back(scaled);
  };
  fit(cam, "input");
  fit(pm, "prediction");
  if (gt) fit(bev_canvas(*gt, class_names, 0.5), "ground truth");
  int total_w = 0;
  for (auto& p : panels) total_w += p.cols + 6;
  cv::Mat board(target_h, total_w, CV_8UC3, cv::Scalar(12, 12, 12));
  int xoff = 0;
  for (auto& p : panels) {
    p.copyTo(board(cv::Rect(xoff, 0, p.cols, p.rows)));
    xoff += p.cols + 6;
  }
  write(board, png_path);
}

}  // namespace bevseg::eval
