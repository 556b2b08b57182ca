// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "bevseg/core/rng.hpp"
#include "bevseg/eval/metrics.hpp"

using namespace bevseg;
using namespace bevseg::eval;

namespace {

std::vector<uint8_t> ones(size_t n) { return std::vector<uint8_t>(n, 1); }

// exhaustive reference for best_iou
std::pair<double, double> brute_best(const std::vector<float>& pred, const std::vector<float>& gt,
                                     const std::vector<uint8_t>& valid,
                                     const std::vector<double>& taus) {
  double best = -1, bt = taus.front();
  for (double t : taus) {
    int64_t inter = 0, uni = 0;
    for (size_t i = 0; i < pred.size(); ++i) {
      if (!valid[i]) continue;
      const bool p = pred[i] >= static_cast<float>(t), g = gt[i] != 0;
      inter += p && g;
      uni += p || g;
    }
    const double v = uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
    if (v > best) {
      best = v;
      bt = t;
    }
  }
  return {best, bt};
}

}  // namespace

TEST_CASE("iou basics") {
  const size_t n = 64;
  std::vector<float> gt(n, 0), pred(n, 0);
  for (size_t i = 0; i < 20; ++i) gt[i] = 1;
  for (size_t i = 10; i < 30; ++i) pred[i] = 0.9f;

  SUBCASE("identity is 1 at any threshold") {
    std::vector<float> same(gt);
    CHECK(iou(same, gt, ones(n), 0.3) == 1.0);
    CHECK(iou(same, gt, ones(n), 0.7) == 1.0);
  }
  SUBCASE("20/20 with overlap 10 gives 10/30") {
    CHECK(iou(pred, gt, ones(n), 0.5) == doctest::Approx(10.0 / 30.0));
  }
  SUBCASE("disjoint sets give 0") {
    std::vector<float> far(n, 0);
    for (size_t i = 40; i < 50; ++i) far[i] = 1.0f;
    CHECK(iou(far, gt, ones(n), 0.5) == 0.0);
  }
  SUBCASE("both empty inside the valid region gives 1") {
    std::vector<float> empty(n, 0);
    CHECK(iou(empty, empty, ones(n), 0.5) == 1.0);
    // one empty gives 0
    CHECK(iou(empty, gt, ones(n), 0.5) == 0.0);
  }
  SUBCASE("symmetry for binary maps") {
    std::vector<float> a(n, 0), b(n, 0);
    Rng rng(3);
    for (size_t i = 0; i < n; ++i) {
      a[i] = rng.uniform01() < 0.4 ? 1.0f : 0.0f;
      b[i] = rng.uniform01() < 0.4 ? 1.0f : 0.0f;
    }
    CHECK(iou(a, b, ones(n), 0.5) == iou(b, a, ones(n), 0.5));
  }
  SUBCASE("shape mismatch is rejected") {
    std::vector<float> small(n - 1, 0);
    CHECK_THROWS_AS((void)iou(small, gt, ones(n), 0.5), InvalidInput);
  }
}

TEST_CASE("best_iou matches exhaustive brute force on random instances") {
  Rng rng(11);
  std::vector<double> taus;
  for (int i = 1; i <= 19; ++i) taus.push_back(i * 0.05);
  for (int inst = 0; inst < 100; ++inst) {
    const size_t n = 16 * 16;
    std::vector<float> pred(n), gt(n);
    std::vector<uint8_t> valid(n);
    for (size_t i = 0; i < n; ++i) {
      pred[i] = static_cast<float>(rng.uniform01());
      gt[i] = rng.uniform01() < 0.3 ? 1.0f : 0.0f;
      valid[i] = rng.uniform01() < 0.9;
    }
    const auto got = best_iou(pred, gt, valid, taus);
    const auto want = brute_best(pred, gt, valid, taus);
    CHECK(got.first == doctest::Approx(want.first));
    CHECK(got.second == doctest::Approx(want.second));
  }
}

TEST_CASE("best_iou dominance and tie-breaking") {
  Rng rng(5);
  const size_t n = 256;
  std::vector<float> pred(n), gt(n);
  for (size_t i = 0; i < n; ++i) {
    pred[i] = static_cast<float>(rng.uniform01());
    gt[i] = rng.uniform01() < 0.25 ? 1.0f : 0.0f;
  }
  std::vector<double> taus;
  for (int i = 1; i <= 19; ++i) taus.push_back(i * 0.05);
  const auto best = best_iou(pred, gt, ones(n), taus);
  CHECK(best.first >= iou(pred, gt, ones(n), 0.5));

  // constant prediction 0.7: IoU identical for all tau <= 0.7, tie at lowest
  std::vector<float> c7(n, 0.7f);
  const auto tie = best_iou(c7, gt, ones(n), taus);
  CHECK(tie.second == doctest::Approx(0.05));

  CHECK_THROWS_AS((void)best_iou(pred, gt, ones(n), {}), InvalidInput);
}

TEST_CASE("evaluator pools over the split and honors masks") {
  const auto gs = geometry::GridSpec::from_ranges(0, 8, -4, 4, 1.0);  // 8x8
  const size_t cells = 64;
  EvalConfig cfg = EvalConfig::defaults();
  cfg.strata.clear();
  const std::vector<std::string> names{"a", "b"};

  Rng rng(21);
  std::vector<geometry::BevMap> preds;
  std::vector<std::vector<uint8_t>> gts, viss;
  for (int s = 0; s < 5; ++s) {
    geometry::BevMap p(gs, 2);
    std::vector<uint8_t> g(cells * 2), v(cells);
    for (size_t i = 0; i < cells * 2; ++i) {
      p.data[i] = static_cast<float>(rng.uniform01());
      g[i] = rng.uniform01() < 0.3;
    }
    for (size_t i = 0; i < cells; ++i) v[i] = rng.uniform01() < 0.8;
    preds.push_back(p);
    gts.push_back(g);
    viss.push_back(v);
  }

  // pooled accumulation equals brute-force pooled confusion
  Evaluator ev(gs, 2, names, cfg);
  for (int s = 0; s < 5; ++s) ev.add(preds[s], gts[s], viss[s]);
  const EvalReport rep = ev.finalize();
  for (int k = 0; k < 2; ++k) {
    double bestv = -1, bestt = 0;
    for (double t : cfg.thresholds) {
      int64_t inter = 0, uni = 0;
      for (int s = 0; s < 5; ++s)
        for (size_t i = 0; i < cells; ++i) {
          if (!viss[s][i]) continue;
          const bool p = preds[s].channel(k)[i] >= static_cast<float>(t);
          const bool g = gts[s][k * cells + i] != 0;
          inter += p && g;
          uni += p || g;
        }
      const double v = uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
      if (v > bestv) {
        bestv = v;
        bestt = t;
      }
    }
    CHECK(rep.per_class_iou[k] == doctest::Approx(bestv));
    CHECK(rep.best_threshold[k] == doctest::Approx(bestt));
  }
  CHECK(rep.mean_iou == doctest::Approx((rep.per_class_iou[0] + rep.per_class_iou[1]) / 2));

  // single-sample evaluation reduces to best_iou per class
  Evaluator ev1(gs, 2, names, cfg);
  ev1.add(preds[0], gts[0], viss[0]);
  const EvalReport rep1 = ev1.finalize();
  for (int k = 0; k < 2; ++k) {
    std::vector<float> p(preds[0].channel(k), preds[0].channel(k) + cells);
    std::vector<float> g(cells);
    for (size_t i = 0; i < cells; ++i) g[i] = gts[0][k * cells + i];
    const auto want = brute_best(p, g, viss[0], cfg.thresholds);
    CHECK(rep1.per_class_iou[k] == doctest::Approx(want.first));
  }

  // corrupting cells outside the mask must not change the report
  Evaluator ev2(gs, 2, names, cfg);
  for (int s = 0; s < 5; ++s) {
    geometry::BevMap corrupted = preds[s];
    std::vector<uint8_t> g2 = gts[s];
    for (size_t i = 0; i < cells; ++i)
      if (!viss[s][i]) {
        corrupted.channel(0)[i] = 1.0f;
        corrupted.channel(1)[i] = 1.0f;
        g2[i] = 1;
        g2[cells + i] = 1;
      }
    ev2.add(corrupted, g2, viss[s]);
  }
  CHECK(ev2.finalize().to_json() == rep.to_json());

  // all-ones visibility equals evaluation without masking
  Evaluator ev3(gs, 2, names, cfg);
  for (int s = 0; s < 5; ++s) ev3.add(preds[s], gts[s], ones(cells));
  const EvalReport unmasked = ev3.finalize();
  for (int k = 0; k < 2; ++k) {
    std::vector<float> p;
    std::vector<float> g;
    std::vector<uint8_t> v;
    for (int s = 0; s < 5; ++s)
      for (size_t i = 0; i < cells; ++i) {
        p.push_back(preds[s].channel(k)[i]);
        g.push_back(gts[s][k * cells + i]);
        v.push_back(1);
      }
    CHECK(unmasked.per_class_iou[k] ==
          doctest::Approx(brute_best(p, g, v, cfg.thresholds).first));
  }
}

TEST_CASE("enlarging the threshold grid never decreases best_iou") {
  Rng rng(31);
  const size_t n = 256;
  std::vector<float> pred(n), gt(n);
  for (size_t i = 0; i < n; ++i) {
    pred[i] = static_cast<float>(rng.uniform01());
    gt[i] = rng.uniform01() < 0.3 ? 1.0f : 0.0f;
  }
  std::vector<double> coarse{0.25, 0.5, 0.75};
  std::vector<double> fine;
  for (int i = 1; i <= 19; ++i) fine.push_back(i * 0.05);
  CHECK(best_iou(pred, gt, ones(n), fine).first >= best_iou(pred, gt, ones(n), coarse).first);
}

TEST_CASE("distance bins partition the range and flag empty gt support") {
  const auto gs = geometry::GridSpec::from_ranges(0, 20, -10, 10, 0.5);
  EvalConfig cfg = EvalConfig::defaults();
  cfg.strata.clear();
  Evaluator ev(gs, 1, {"a"}, cfg);
  geometry::BevMap pred(gs, 1);
  std::vector<uint8_t> gt(pred.cells(), 0), vis(pred.cells(), 1);
  // ground truth only within 5 m of the camera
  for (int r = 0; r < gs.rows; ++r)
    for (int c = 0; c < gs.cols; ++c) {
      const double rad = std::hypot(gs.x_of_row(r), gs.y_of_col(c));
      if (rad < 5.0) {
        gt[r * gs.cols + c] = 1;
        pred.at(0, r, c) = 0.9f;
      }
    }
  ev.add(pred, gt, vis);
  const EvalReport rep = ev.finalize();
  REQUIRE(rep.bins.size() >= 2);
  CHECK(rep.bins[0].r0 == 0.0);
  CHECK(rep.bins[0].r1 == 5.0);
  CHECK(rep.bins[0].per_class_iou[0] == doctest::Approx(1.0));
  CHECK(rep.bins[0].class_empty[0] == 0);
  // far bins have no gt support: empty-set convention, flagged
  CHECK(rep.bins[1].class_empty[0] == 1);
  CHECK(rep.bins[1].per_class_iou[0] == doctest::Approx(1.0));
}

TEST_CASE("report json round trip") {
  const auto gs = geometry::GridSpec::from_ranges(0, 8, -4, 4, 1.0);
  EvalConfig cfg = EvalConfig::defaults();
  cfg.strata = {{"layout", {"a"}}};
  Evaluator ev(gs, 1, {"a"}, cfg);
  geometry::BevMap pred(gs, 1);
  std::vector<uint8_t> gt(pred.cells(), 0);
  gt[5] = 1;
  pred.data[5] = 0.8f;
  ev.add(pred, gt, ones(pred.cells()));
  const EvalReport rep = ev.finalize();
  const EvalReport back = EvalReport::from_json(rep.to_json());
  CHECK(back.to_json() == rep.to_json());
  CHECK(back.stratum_iou.size() == 1);
}

TEST_CASE("isotonic fit is non-increasing and exact on monotone input") {
  const std::vector<double> mono{0.9, 0.8, 0.7, 0.6};
  CHECK(isotonic_non_increasing(mono) == mono);
  const std::vector<double> bump{0.9, 0.7, 0.8, 0.5};
  const auto fit = isotonic_non_increasing(bump);
  for (size_t i = 1; i < fit.size(); ++i) CHECK(fit[i] <= fit[i - 1] + 1e-12);
  CHECK(fit[1] == doctest::Approx(0.75));
  CHECK(fit[2] == doctest::Approx(0.75));
}
