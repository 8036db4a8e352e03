#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "genclean/nn.hpp"

using namespace genclean;
using nn::Tensor;
using Catch::Approx;

namespace {

// max relative error with a small-magnitude guard, as used for all gradient
// checks against central finite differences
double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

Tensor<double> random_tensor(std::vector<std::size_t> shape, std::mt19937& gen, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto& v : t.data) v = u(gen);
  return t;
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

TEST_CASE("conv1d forward matches hand computation") {
  Tensor<double> x({1, 4});
  x.data = {1, 2, 3, 4};
  Tensor<double> w({1, 1, 3});
  w.data = {1, 0, -1};
  Tensor<double> b({1});
  auto y = nn::conv1d_forward(x, w, b, 1, 1);
  REQUIRE(y.shape == std::vector<std::size_t>{1, 4});
  CHECK(y[0] == Approx(-2));
  CHECK(y[1] == Approx(-2));
  CHECK(y[2] == Approx(-2));
  CHECK(y[3] == Approx(3));
}

TEST_CASE("conv1d identity kernel and stride shapes") {
  std::mt19937 gen(1);
  auto x = random_tensor({1, 16}, gen);
  Tensor<double> w({1, 1, 3});
  w.data = {0, 1, 0};
  Tensor<double> b({1});
  auto y = nn::conv1d_forward(x, w, b, 1, 1);
  for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(y[i] == Approx(x[i]));

  auto x2 = random_tensor({1, 1200}, gen);
  Tensor<double> w2({4, 1, 9});
  Tensor<double> b2({4});
  auto y2 = nn::conv1d_forward(x2, w2, b2, 2, 4);
  CHECK(y2.shape == std::vector<std::size_t>{4, 600});
}

TEST_CASE("conv1d rejects inconsistent shapes") {
  Tensor<double> x({2, 8});
  Tensor<double> w({3, 1, 3});  // in_ch 1 != 2
  Tensor<double> b({3});
  CHECK_THROWS_AS(nn::conv1d_forward(x, w, b, 1, 1), Error);
}

TEST_CASE("conv1d backward matches finite differences") {
  std::mt19937 gen(2);
  for (auto [ci, co, len, k, stride] :
       {std::array<std::size_t, 5>{1, 2, 9, 3, 1}, std::array<std::size_t, 5>{2, 3, 12, 5, 2},
        std::array<std::size_t, 5>{3, 1, 16, 9, 5}}) {
    const std::size_t pad = (k - 1) / 2;
    auto x = random_tensor({ci, len}, gen);
    auto w = random_tensor({co, ci, k}, gen);
    auto b = random_tensor({co}, gen);
    auto y = nn::conv1d_forward(x, w, b, stride, pad);
    auto c = random_tensor(y.shape, gen);  // loss = <c, y>

    auto g = nn::conv1d_backward(c, x, w, stride, pad);

    const double h = 1e-5;
    auto fd_check = [&](Tensor<double>& target, const Tensor<double>& analytic) {
      for (std::size_t i = 0; i < target.size(); ++i) {
        const double keep = target[i];
        target[i] = keep + h;
        const double lp = dot(c, nn::conv1d_forward(x, w, b, stride, pad));
        target[i] = keep - h;
        const double lm = dot(c, nn::conv1d_forward(x, w, b, stride, pad));
        target[i] = keep;
        REQUIRE(rel_err(analytic[i], (lp - lm) / (2 * h)) <= 1e-4);
      }
    };
    fd_check(x, g.x);
    fd_check(w, g.w);
    fd_check(b, g.b);
  }
}

TEST_CASE("conv1d backward trivial cases") {
  std::mt19937 gen(3);
  auto x = random_tensor({1, 10}, gen);
  Tensor<double> w({1, 1, 3});
  w.data = {0, 1, 0};

  Tensor<double> zeros({1, 10});
  auto g0 = nn::conv1d_backward(zeros, x, w, 1, 1);
  for (double v : g0.x.data) CHECK(v == 0.0);
  for (double v : g0.w.data) CHECK(v == 0.0);
  CHECK(g0.b[0] == 0.0);

  auto g = random_tensor({1, 10}, gen);
  auto gi = nn::conv1d_backward(g, x, w, 1, 1);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(gi.x[i] == Approx(g[i]));
}

TEST_CASE("transposed conv is the adjoint of conv") {
  std::mt19937 gen(4);
  for (auto [a_ch, b_ch, len, k, stride] :
       {std::array<std::size_t, 5>{2, 3, 20, 9, 2}, std::array<std::size_t, 5>{1, 4, 25, 5, 5},
        std::array<std::size_t, 5>{3, 2, 17, 3, 1}}) {
    const std::size_t pad = (k - 1) / 2;
    auto x = random_tensor({b_ch, len}, gen);
    auto w = random_tensor({a_ch, b_ch, k}, gen);
    Tensor<double> zero_a({a_ch});
    Tensor<double> zero_b({b_ch});

    // conv: [b_ch, len] -> [a_ch, lo];  tconv with same w: [a_ch, lo] -> [b_ch, len]
    auto cx = nn::conv1d_forward(x, w, zero_a, stride, pad);
    auto y = random_tensor(cx.shape, gen);
    auto ty = nn::tconv1d_forward(y, w, zero_b, stride, pad, len);
    REQUIRE(std::abs(dot(cx, y) - dot(x, ty)) <= 1e-9 * (1 + std::abs(dot(cx, y))));
  }
}

TEST_CASE("transposed conv shapes and identity") {
  std::mt19937 gen(5);
  auto x = random_tensor({1, 12}, gen);
  Tensor<double> w({1, 1, 3});
  w.data = {0, 1, 0};
  Tensor<double> b({1});
  auto y = nn::tconv1d_forward(x, w, b, 1, 1, 12);
  for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(y[i] == Approx(x[i]));

  auto x2 = random_tensor({4, 600}, gen);
  Tensor<double> w2({4, 2, 9});
  Tensor<double> b2({2});
  auto y2 = nn::tconv1d_forward(x2, w2, b2, 2, 4, 1200);
  CHECK(y2.shape == std::vector<std::size_t>{2, 1200});
}

TEST_CASE("transposed conv backward matches finite differences") {
  std::mt19937 gen(6);
  const std::size_t ci = 3, co = 2, out_len = 15, k = 5, stride = 3, pad = 2;
  const std::size_t in_len = (out_len + 2 * pad - k) / stride + 1;
  auto x = random_tensor({ci, in_len}, gen);
  auto w = random_tensor({ci, co, k}, gen);
  auto b = random_tensor({co}, gen);
  auto y = nn::tconv1d_forward(x, w, b, stride, pad, out_len);
  auto c = random_tensor(y.shape, gen);

  auto g = nn::tconv1d_backward(c, x, w, stride, pad);

  const double h = 1e-5;
  auto fd_check = [&](Tensor<double>& target, const Tensor<double>& analytic) {
    for (std::size_t i = 0; i < target.size(); ++i) {
      const double keep = target[i];
      target[i] = keep + h;
      const double lp = dot(c, nn::tconv1d_forward(x, w, b, stride, pad, out_len));
      target[i] = keep - h;
      const double lm = dot(c, nn::tconv1d_forward(x, w, b, stride, pad, out_len));
      target[i] = keep;
      REQUIRE(rel_err(analytic[i], (lp - lm) / (2 * h)) <= 1e-4);
    }
  };
  fd_check(x, g.x);
  fd_check(w, g.w);
  fd_check(b, g.b);
}

TEST_CASE("dense forward and backward") {
  std::mt19937 gen(7);
  Tensor<double> eye({3, 3});
  for (int i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
  Tensor<double> zero3({3});
  auto x = random_tensor({3}, gen);
  auto y = nn::dense_forward(x, eye, zero3);
  for (int i = 0; i < 3; ++i) REQUIRE(y[i] == Approx(x[i]));

  Tensor<double> wz({3, 3});
  auto b = random_tensor({3}, gen);
  auto yb = nn::dense_forward(x, wz, b);
  for (int i = 0; i < 3; ++i) REQUIRE(yb[i] == Approx(b[i]));

  auto w = random_tensor({5, 8}, gen);
  auto x2 = random_tensor({8}, gen);
  auto b2 = random_tensor({5}, gen);
  auto out = nn::dense_forward(x2, w, b2);
  auto c = random_tensor(out.shape, gen);
  auto g = nn::dense_backward(c, x2, w);

  const double h = 1e-6;
  auto fd_check = [&](Tensor<double>& target, const Tensor<double>& analytic) {
    for (std::size_t i = 0; i < target.size(); ++i) {
      const double keep = target[i];
      target[i] = keep + h;
      const double lp = dot(c, nn::dense_forward(x2, w, b2));
      target[i] = keep - h;
      const double lm = dot(c, nn::dense_forward(x2, w, b2));
      target[i] = keep;
      REQUIRE(rel_err(analytic[i], (lp - lm) / (2 * h)) <= 1e-6);
    }
  };
  fd_check(x2, g.x);
  fd_check(w, g.w);
  fd_check(b2, g.b);
}

TEST_CASE("relu forward and gradient") {
  Tensor<double> x({3});
  x.data = {-1, 0, 2};
  auto y = nn::relu(x);
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 0.0);
  CHECK(y[2] == 2.0);

  Tensor<double> g({3});
  g.data = {1, 1, 1};
  auto gx = nn::relu_backward(g, x);
  CHECK(gx[0] == 0.0);  // gradient at x = -1
  CHECK(gx[1] == 0.0);
  CHECK(gx[2] == 1.0);  // gradient at x = 2

  // finite differences away from the kink
  std::mt19937 gen(8);
  auto xr = random_tensor({20}, gen);
  for (auto& v : xr.data)
    if (std::abs(v) < 0.05) v = 0.1;
  auto c = random_tensor({20}, gen);
  auto ga = nn::relu_backward(c, xr);
  const double h = 1e-6;
  for (std::size_t i = 0; i < xr.size(); ++i) {
    const double keep = xr[i];
    xr[i] = keep + h;
    const double lp = dot(c, nn::relu(xr));
    xr[i] = keep - h;
    const double lm = dot(c, nn::relu(xr));
    xr[i] = keep;
    REQUIRE(rel_err(ga[i], (lp - lm) / (2 * h)) <= 1e-6);
  }
}

TEST_CASE("adam first step closed form") {
  nn::Param<double> p({1});
  p.value[0] = 0.0;
  p.grad[0] = 1.0;
  nn::adam_step(p, 0.001);
  CHECK(p.value[0] == Approx(-0.000999999990).margin(1e-12));
  CHECK(p.step_count == 1);
}

TEST_CASE("adam trivial behaviors") {
  nn::Param<double> p({2});
  p.value.data = {1.5, -2.0};
  nn::adam_step(p, 0.001);  // zero gradient, zero moments
  CHECK(p.value[0] == Approx(1.5));
  CHECK(p.value[1] == Approx(-2.0));

  // identical history gives identical updates
  nn::Param<double> a({1}), b({1});
  std::mt19937 gen(9);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 25; ++i) {
    const double g = u(gen);
    a.grad[0] = g;
    b.grad[0] = g;
    nn::adam_step(a, 0.01);
    nn::adam_step(b, 0.01);
    REQUIRE(a.value[0] == b.value[0]);
  }

  // lr = 0 never changes the value
  nn::Param<double> z({1});
  z.value[0] = 3.25;
  for (int i = 0; i < 5; ++i) {
    z.grad[0] = u(gen);
    nn::adam_step(z, 0.0);
    REQUIRE(z.value[0] == 3.25);
  }
}

TEST_CASE("kernels are deterministic") {
  std::mt19937 gen(10);
  auto x = random_tensor({2, 30}, gen);
  auto w = random_tensor({3, 2, 5}, gen);
  auto b = random_tensor({3}, gen);
  auto y1 = nn::conv1d_forward(x, w, b, 2, 2);
  auto y2 = nn::conv1d_forward(x, w, b, 2, 2);
  REQUIRE(y1.data == y2.data);
}
