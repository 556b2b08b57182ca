// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "bevseg/core/rng.hpp"
#include "bevseg/nn/loss.hpp"

using namespace bevseg;
using namespace bevseg::nn;

namespace {

// central finite differences in double precision
template <typename F>
std::vector<double> fd_gradient(F f, std::vector<double>& x, double h = 1e-6) {
  std::vector<double> g(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f();
    x[i] = keep - h;
    const double dn = f();
    x[i] = keep;
    g[i] = (up - dn) / (2 * h);
  }
  return g;
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1e-12, std::abs(a), std::abs(b)});
}

}  // namespace

TEST_CASE("weighted_bce hand examples") {
  SUBCASE("y=1, y_hat=0.5, w=2 on a single cell gives 2 ln 2") {
    Tensor yh({1, 1, 1, 1}), y({1, 1, 1, 1});
    yh[0] = 0.5f;
    y[0] = 1.0f;
    CHECK(weighted_bce(yh, y, {2.0f}, nullptr) == doctest::Approx(2.0 * std::log(2.0)));
  }
  SUBCASE("perfect prediction is ~0") {
    Tensor yh({1, 2, 2, 2}), y({1, 2, 2, 2});
    for (int i = 0; i < 8; ++i) {
      y[i] = i % 2 ? 1.0f : 0.0f;
      yh[i] = y[i];
    }
    const double loss = weighted_bce(yh, y, {1.0f, 3.0f}, nullptr);
    CHECK(loss >= 0.0);
    CHECK(loss <= 3.0 * -std::log(1.0 - 1e-7) + 1e-9);
  }
  SUBCASE("unit weights equal an unweighted direct evaluation") {
    Rng rng(2);
    Tensor yh({2, 3, 4, 4}), y({2, 3, 4, 4});
    for (int64_t i = 0; i < yh.numel(); ++i) {
      yh[i] = static_cast<float>(rng.uniform(0.02, 0.98));
      y[i] = rng.uniform01() < 0.5 ? 1.0f : 0.0f;
    }
    const double got = weighted_bce(yh, y, {1.0f, 1.0f, 1.0f}, nullptr);
    double want = 0;
    for (int64_t i = 0; i < yh.numel(); ++i)
      want += -(y[i] * std::log(static_cast<double>(yh[i])) +
                (1 - y[i]) * std::log(1.0 - static_cast<double>(yh[i])));
    want /= static_cast<double>(yh.numel());
    CHECK(rel_err(got, want) < 1e-6);
  }
  SUBCASE("non-binary targets are rejected") {
    Tensor yh({1, 1, 1, 1}), y({1, 1, 1, 1});
    yh[0] = 0.5f;
    y[0] = 0.3f;
    CHECK_THROWS_AS((void)weighted_bce(yh, y, {1.0f}, nullptr), InvalidInput);
  }
  SUBCASE("shape mismatch is rejected") {
    Tensor yh({1, 1, 2, 2}), y({1, 1, 2, 3});
    CHECK_THROWS_AS((void)weighted_bce(yh, y, {1.0f}, nullptr), InvalidInput);
  }
}

TEST_CASE("weighted_bce analytic gradient matches central differences (50 instances)") {
  Rng rng(7);
  double worst = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const int64_t n = 1, k = 2, cells = 16;  // 4x4x2
    std::vector<double> yh(n * k * cells), y(n * k * cells), w{rng.uniform(0.5, 3.0),
                                                              rng.uniform(0.5, 3.0)};
    for (auto& v : yh) v = rng.uniform(0.05, 0.95);
    for (auto& v : y) v = rng.uniform01() < 0.5 ? 1.0 : 0.0;
    std::vector<double> grad(yh.size());
    weighted_bce_ref<double>(yh.data(), y.data(), w.data(), n, k, cells, grad.data());
    auto f = [&] {
      return weighted_bce_ref<double>(yh.data(), y.data(), w.data(), n, k, cells);
    };
    const std::vector<double> fd = fd_gradient(f, yh);
    for (size_t i = 0; i < grad.size(); ++i) worst = std::max(worst, rel_err(grad[i], fd[i]));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("mse basics and gradient") {
  SUBCASE("identity gives zero, offset one gives one") {
    Tensor a({2, 3, 2, 2}), b({2, 3, 2, 2});
    Rng rng(9);
    for (int64_t i = 0; i < a.numel(); ++i) a[i] = b[i] = static_cast<float>(rng.normal());
    CHECK(mse(a, b, nullptr) == 0.0);
    for (int64_t i = 0; i < a.numel(); ++i) a[i] = b[i] + 1.0f;
    CHECK(mse(a, b, nullptr) == doctest::Approx(1.0));
  }
  SUBCASE("random pair equals elementwise recomputation") {
    Rng rng(13);
    Tensor a({1, 4, 3, 3}), b({1, 4, 3, 3});
    for (int64_t i = 0; i < a.numel(); ++i) {
      a[i] = static_cast<float>(rng.normal());
      b[i] = static_cast<float>(rng.normal());
    }
    double want = 0;
    for (int64_t i = 0; i < a.numel(); ++i)
      want += (static_cast<double>(a[i]) - b[i]) * (static_cast<double>(a[i]) - b[i]);
    want /= static_cast<double>(a.numel());
    CHECK(rel_err(mse(a, b, nullptr), want) < 1e-6);
  }
  SUBCASE("analytic gradient matches central differences (50 instances)") {
    Rng rng(17);
    double worst = 0;
    for (int inst = 0; inst < 50; ++inst) {
      const int64_t m = 24;
      std::vector<double> a(m), b(m), grad(m);
      for (int64_t i = 0; i < m; ++i) {
        a[i] = rng.normal();
        b[i] = rng.normal();
      }
      mse_ref<double>(a.data(), b.data(), m, grad.data());
      auto f = [&] { return mse_ref<double>(a.data(), b.data(), m); };
      const std::vector<double> fd = fd_gradient(f, a);
      for (int64_t i = 0; i < m; ++i) worst = std::max(worst, rel_err(grad[i], fd[i]));
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("float tensor wrappers agree with the double reference") {
  Rng rng(23);
  Tensor yh({1, 2, 4, 4}), y({1, 2, 4, 4});
  std::vector<double> yhd(yh.numel()), yd(yh.numel());
  for (int64_t i = 0; i < yh.numel(); ++i) {
    yhd[i] = rng.uniform(0.05, 0.95);
    yd[i] = rng.uniform01() < 0.5 ? 1.0 : 0.0;
    yh[i] = static_cast<float>(yhd[i]);
    y[i] = static_cast<float>(yd[i]);
  }
  const std::vector<float> w{1.5f, 0.7f};
  const std::vector<double> wd{1.5, 0.7};
  Tensor dyh;
  const double got = weighted_bce(yh, y, w, &dyh);
  std::vector<double> grad(yh.numel());
  const double want =
      weighted_bce_ref<double>(yhd.data(), yd.data(), wd.data(), 1, 2, 16, grad.data());
  CHECK(rel_err(got, want) < 1e-5);
  for (int64_t i = 0; i < yh.numel(); ++i) CHECK(rel_err(dyh[i], grad[i]) < 1e-3);
}
