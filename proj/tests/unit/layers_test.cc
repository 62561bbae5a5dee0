// Copyright 2026 The aens Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "aens/layers.h"

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "aens/grad_check.h"
#include "test_util.h"

namespace aens {
namespace {

using testing::random_tensor;

LayerParams<double> params(const TensorD& w, const TensorD& b) { return {"layer", w, b}; }

double dot(const TensorD& a, const TensorD& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

TEST(Conv2dTest, OneByOneIdentity) {
  const TensorD x({1, 1, 3, 3}, 1.0);
  const TensorD y = conv2d_forward(x, params(TensorD({1, 1, 1, 1}, 1.0), TensorD({1}, 0.0)), 1, Padding::kSame);
  EXPECT_EQ(y, x);
}

TEST(Conv2dTest, OneByOneIdentityPerChannel) {
  std::mt19937_64 gen(1);
  const TensorD x = random_tensor(gen, {2, 3, 4, 5});
  TensorD w({3, 3, 1, 1}, 0.0);
  for (std::size_t c = 0; c < 3; ++c) w.at({c, c, 0, 0}) = 1.0;
  EXPECT_EQ(conv2d_forward(x, params(w, TensorD({3}, 0.0)), 1, Padding::kSame), x);
}

TEST(Conv2dTest, ValidSumOfAllElements) {
  const TensorD x({1, 1, 2, 2}, {1, 2, 3, 4});
  const TensorD y = conv2d_forward(x, params(TensorD({1, 1, 2, 2}, 1.0), TensorD({1}, 0.0)), 1, Padding::kValid);
  EXPECT_EQ(y, TensorD({1, 1, 1, 1}, {10}));
}

TEST(Conv2dTest, SameMatchesNaiveOracle) {
  std::mt19937_64 gen(2);
  const TensorD x = random_tensor(gen, {1, 2, 5, 5});
  const TensorD w = random_tensor(gen, {3, 2, 3, 3});
  const TensorD b = random_tensor(gen, {3});
  const TensorD y = conv2d_forward(x, params(w, b), 1, Padding::kSame);
  EXPECT_LE(max_abs_diff(y, testing::naive_conv2d(x, w, b, 1, 1, 1, 5, 5)), 1e-6);
  // Float path against the same oracle.
  const TensorF yf = conv2d_forward(x.cast<float>(), params(w, b).cast<float>(), 1, Padding::kSame);
  EXPECT_LE(max_abs_diff(yf.cast<double>(), testing::naive_conv2d(x, w, b, 1, 1, 1, 5, 5)), 1e-5);
}

TEST(Conv2dTest, EvenKernelAndStrideMatchNaiveOracle) {
  std::mt19937_64 gen(3);
  const TensorD x = random_tensor(gen, {2, 2, 6, 7});
  const TensorD w2 = random_tensor(gen, {4, 2, 2, 2});
  const TensorD b = random_tensor(gen, {4});
  // Even kernel, `same`: total pad 1, all of it bottom/right.
  const TensorD y = conv2d_forward(x, params(w2, b), 1, Padding::kSame);
  EXPECT_EQ(y.shape(), (Shape{2, 4, 6, 7}));
  EXPECT_LE(max_abs_diff(y, testing::naive_conv2d(x, w2, b, 1, 0, 0, 6, 7)), 1e-12);
  // Stride 2, `same`: out = ceil(in / 2).
  const TensorD w3 = random_tensor(gen, {4, 2, 3, 3});
  const ConvGeometry g = conv_geometry(x.shape(), w3.shape(), 2, Padding::kSame);
  EXPECT_EQ(g.out_h, 3u);
  EXPECT_EQ(g.out_w, 4u);
  const TensorD ys = conv2d_forward(x, params(w3, b), 2, Padding::kSame);
  EXPECT_LE(max_abs_diff(ys, testing::naive_conv2d(x, w3, b, 2, g.pad_top, g.pad_left, 3, 4)), 1e-12);
  // Valid.
  const TensorD yv = conv2d_forward(x, params(w3, b), 1, Padding::kValid);
  EXPECT_LE(max_abs_diff(yv, testing::naive_conv2d(x, w3, b, 1, 0, 0, 4, 5)), 1e-12);
}

TEST(Conv2dTest, ShapeErrors) {
  const TensorD x({1, 2, 4, 4}, 1.0);
  EXPECT_THROW(conv2d_forward(x, params(TensorD({1, 3, 3, 3}, 1.0), TensorD({1}, 0.0)), 1, Padding::kSame), ShapeError);
  EXPECT_THROW(conv2d_forward(x, params(TensorD({1, 2, 3, 3}, 1.0), TensorD({2}, 0.0)), 1, Padding::kSame), ShapeError);
  EXPECT_THROW(conv2d_forward(x, params(TensorD({1, 2, 5, 5}, 1.0), TensorD({1}, 0.0)), 1, Padding::kValid), ShapeError);
  Conv2dCache<double> cache;
  conv2d_forward(x, params(TensorD({1, 2, 3, 3}, 1.0), TensorD({1}, 0.0)), 1, Padding::kSame, &cache);
  EXPECT_THROW(conv2d_backward(cache, TensorD({1, 1, 3, 3}, 1.0)), ShapeError);
}

TEST(Conv2dTest, ZeroUpstreamGivesZeroGradients) {
  std::mt19937_64 gen(4);
  Conv2dCache<double> cache;
  conv2d_forward(random_tensor(gen, {2, 2, 4, 4}), params(random_tensor(gen, {3, 2, 3, 3}), random_tensor(gen, {3})), 1,
                 Padding::kSame, &cache);
  const auto g = conv2d_backward(cache, TensorD({2, 3, 4, 4}, 0.0));
  for (const TensorD* t : {&g.grad_input, &g.grad_weights, &g.grad_bias})
    for (double v : t->data()) EXPECT_EQ(v, 0.0);
}

TEST(Conv2dTest, OneByOneBackwardScalesByWeight) {
  std::mt19937_64 gen(5);
  Conv2dCache<double> cache;
  conv2d_forward(random_tensor(gen, {1, 1, 3, 3}), params(TensorD({1, 1, 1, 1}, 2.5), TensorD({1}, 0.0)), 1,
                 Padding::kSame, &cache);
  const TensorD up = random_tensor(gen, {1, 1, 3, 3});
  EXPECT_LE(max_abs_diff(conv2d_backward(cache, up).grad_input, scale(up, 2.5)), 1e-15);
}

TEST(Conv2dTest, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 gen(6);
  const TensorD x = random_tensor(gen, {2, 2, 4, 3});
  const TensorD w = random_tensor(gen, {2, 2, 3, 3});
  const TensorD b = random_tensor(gen, {2});
  const TensorD probe = random_tensor(gen, {2, 2, 4, 3});
  Conv2dCache<double> cache;
  conv2d_forward(x, params(w, b), 1, Padding::kSame, &cache);
  const auto g = conv2d_backward(cache, probe);
  EXPECT_LT(grad_check([&](const TensorD& v) { return dot(probe, conv2d_forward(v, params(w, b), 1, Padding::kSame)); },
                       g.grad_input, x),
            1e-4);
  EXPECT_LT(grad_check([&](const TensorD& v) { return dot(probe, conv2d_forward(x, params(v, b), 1, Padding::kSame)); },
                       g.grad_weights, w),
            1e-4);
  EXPECT_LT(grad_check([&](const TensorD& v) { return dot(probe, conv2d_forward(x, params(w, v), 1, Padding::kSame)); },
                       g.grad_bias, b),
            1e-4);
}

TEST(DenseTest, Examples) {
  std::mt19937_64 gen(7);
  const TensorD x = random_tensor(gen, {3, 4});
  EXPECT_EQ(dense_forward(x, params(TensorD::identity(4), TensorD({4}, 0.0))), x);
  const TensorD y = dense_forward(TensorD({1, 2}, {1, 2}), params(TensorD({2, 1}, 1.0), TensorD({1}, 0.5)));
  EXPECT_EQ(y, TensorD({1, 1}, {3.5}));
  EXPECT_THROW(dense_forward(x, params(TensorD({3, 2}, 1.0), TensorD({2}, 0.0))), ShapeError);
}

TEST(DenseTest, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 gen(8);
  const TensorD x = random_tensor(gen, {3, 4});
  const TensorD w = random_tensor(gen, {4, 2});
  const TensorD b = random_tensor(gen, {2});
  const TensorD probe = random_tensor(gen, {3, 2});
  DenseCache<double> cache;
  dense_forward(x, params(w, b), &cache);
  const auto g = dense_backward(cache, probe);
  EXPECT_LT(grad_check([&](const TensorD& v) { return dot(probe, dense_forward(v, params(w, b))); }, g.grad_input, x), 1e-4);
  EXPECT_LT(grad_check([&](const TensorD& v) { return dot(probe, dense_forward(x, params(v, b))); }, g.grad_weights, w), 1e-4);
  EXPECT_LT(grad_check([&](const TensorD& v) { return dot(probe, dense_forward(x, params(w, v))); }, g.grad_bias, b), 1e-4);
}

TEST(ActivationTest, Examples) {
  EXPECT_EQ(sigmoid_forward(TensorD({1}, 0.0))[0], 0.5);
  EXPECT_EQ(relu_forward(TensorD({2}, {-1, 2})), TensorD({2}, {0, 2}));
  // Subgradient at the kink is 0.
  EXPECT_EQ(relu_backward(TensorD({3}, {-1, 0, 2}), TensorD({3}, 1.0)), TensorD({3}, {0, 0, 1}));
}

TEST(ActivationTest, SigmoidDerivative) {
  std::mt19937_64 gen(9);
  const TensorD x = random_tensor(gen, {6}, -4, 4);
  const TensorD s = sigmoid_forward(x);
  const TensorD g = sigmoid_backward(s, TensorD({6}, 1.0));
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(g[i], s[i] * (1 - s[i]), 1e-15);
  EXPECT_LT(grad_check([](const TensorD& v) {
              const TensorD y = sigmoid_forward(v);
              double t = 0;
              for (double e : y.data()) t += e;
              return t;
            },
                       g, x),
            1e-4);
}

TEST(SoftmaxTest, Examples) {
  const TensorD a = softmax_forward(TensorD({1, 2}, {0, 0}));
  EXPECT_EQ(a, TensorD({1, 2}, {0.5, 0.5}));
  const TensorD b = softmax_forward(TensorD({1, 2}, {0, std::log(3.0)}));
  EXPECT_NEAR(b[0], 0.25, 1e-15);
  EXPECT_NEAR(b[1], 0.75, 1e-15);
  EXPECT_EQ(softmax_forward(TensorD({1, 2}, {1000, 1000})), TensorD({1, 2}, {0.5, 0.5}));
  EXPECT_THROW(softmax_forward(TensorD({1, 2}, {0, NAN})), NumericError);
  EXPECT_THROW(softmax_forward(TensorD({1, 2}, {0, INFINITY})), NumericError);
}

TEST(SoftmaxTest, RowsSumToOneAndShiftInvariant) {
  std::mt19937_64 gen(10);
  for (int trial = 0; trial < 50; ++trial) {
    const TensorD z = random_tensor(gen, {4, 7}, -50, 50);
    const TensorD p = softmax_forward(z);
    TensorD shifted = z;
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t k = 0; k < 7; ++k) shifted.at({r, k}) += 13.0 * static_cast<double>(r + 1) - 20.0;
    EXPECT_LE(max_abs_diff(p, softmax_forward(shifted)), 1e-6);
    for (std::size_t r = 0; r < 4; ++r) {
      double sum = 0;
      for (std::size_t k = 0; k < 7; ++k) sum += p.at({r, k});
      EXPECT_NEAR(sum, 1.0, 1e-6);
    }
  }
}

TEST(GapTest, Examples) {
  EXPECT_EQ(gap_forward(TensorD({1, 1, 3, 2}, 7.0)), TensorD({1, 1}, {7}));
  EXPECT_EQ(gap_forward(TensorD({1, 1, 2, 2}, {1, 2, 3, 4})), TensorD({1, 1}, {2.5}));
  EXPECT_EQ(gap_backward({1, 1, 2, 2}, TensorD({1, 1}, {4.0})), TensorD({1, 1, 2, 2}, 1.0));
}

TEST(DropoutTest, EvalAndZeroRateAreIdentity) {
  std::mt19937_64 gen(11);
  const TensorD x = random_tensor(gen, {4, 8});
  EXPECT_EQ(dropout_forward(x, 0.4, ForwardMode::eval()).output, x);
  EXPECT_EQ(dropout_forward(x, 0.0, ForwardMode::eval()).output, x);
  EXPECT_EQ(dropout_forward(x, 0.0, ForwardMode::train(5)).output, x);
}

TEST(DropoutTest, SurvivorsAreScaled) {
  const auto r = dropout_forward(TensorD({4, 16}, 1.0), 0.5, ForwardMode::train(42));
  std::size_t kept = 0;
  for (double v : r.output.data()) {
    EXPECT_TRUE(v == 0.0 || v == 2.0);
    kept += v == 2.0;
  }
  EXPECT_GT(kept, 0u);
  EXPECT_LT(kept, 64u);
  EXPECT_EQ(r.output, dropout_forward(TensorD({4, 16}, 1.0), 0.5, ForwardMode::train(42)).output);
  EXPECT_EQ(dropout_backward(r.mask, TensorD({4, 16}, 1.0)), r.output);
}

TEST(DropoutTest, ExpectationMatchesInput) {
  const TensorD x({1, 5}, {0.3, -1.2, 2.0, 0.7, 1.5});
  TensorD sum({1, 5}, 0.0);
  constexpr int kDraws = 10000;
  for (int d = 0; d < kDraws; ++d) sum = add(sum, dropout_forward(x, 0.4, ForwardMode::train(1000 + d)).output);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(sum[i] / kDraws, x[i], 0.02 * std::abs(x[i])) << i;
}

TEST(DropoutTest, InvalidRate) {
  const TensorD x({2}, 1.0);
  EXPECT_THROW(dropout_forward(x, 1.0, ForwardMode::train(1)), ConfigError);
  EXPECT_THROW(dropout_forward(x, -0.1, ForwardMode::train(1)), ConfigError);
}

TEST(MaxPoolTest, Examples) {
  EXPECT_EQ(maxpool2d_forward(TensorD({1, 1, 2, 2}, {1, 2, 3, 4})), TensorD({1, 1, 1, 1}, {4}));
  MaxPoolCache<double> cache;
  maxpool2d_forward(TensorD({1, 1, 2, 2}, 3.0), &cache);
  EXPECT_EQ(maxpool2d_backward(cache, TensorD({1, 1, 1, 1}, 1.0)), TensorD({1, 1, 2, 2}, {1, 0, 0, 0}));
  EXPECT_THROW(maxpool2d_forward(TensorD({1, 1, 1, 4}, 1.0)), ShapeError);
}

TEST(MaxPoolTest, OddSizesFloor) {
  const TensorD x({1, 1, 3, 5}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15});
  EXPECT_EQ(maxpool2d_forward(x), TensorD({1, 1, 1, 2}, {7, 9}));
}

TEST(MaxPoolTest, BackwardMatchesFiniteDifferencesAwayFromTies) {
  std::mt19937_64 gen(12);
  TensorD x({2, 1, 4, 4}, 0.0);
  std::vector<double> values(32);
  for (std::size_t i = 0; i < 32; ++i) values[i] = 0.05 * static_cast<double>(i);
  std::shuffle(values.begin(), values.end(), gen);
  for (std::size_t i = 0; i < 32; ++i) x[i] = values[i];
  const TensorD probe = random_tensor(gen, {2, 1, 2, 2});
  MaxPoolCache<double> cache;
  maxpool2d_forward(x, &cache);
  EXPECT_LT(grad_check([&](const TensorD& v) { return dot(probe, maxpool2d_forward(v)); },
                       maxpool2d_backward(cache, probe), x),
            1e-4);
}

}  // namespace
}  // namespace aens
