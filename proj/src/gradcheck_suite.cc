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

#include "aens/gradcheck_suite.h"

#include <algorithm>
#include <functional>

#include "aens/channel_attention.h"
#include "aens/data.h"
#include "aens/grad_check.h"
#include "aens/layers.h"
#include "aens/model.h"
#include "aens/random.h"
#include "aens/trainer.h"

namespace aens {
namespace {

TensorD random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  TensorD t(std::move(shape), 0.0);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

// Random magnitudes in [0.1, 1] with random sign: far from the ReLU kink.
TensorD away_from_zero(Rng& rng, Shape shape) {
  TensorD t(std::move(shape), 0.0);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.1, 1.0);
  return t;
}

double dot(const TensorD& a, const TensorD& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Concatenated view over several tensors so one check covers input and params.
struct Packed {
  std::vector<Shape> shapes;
  TensorD flat;

  static Packed of(const std::vector<const TensorD*>& parts) {
    Packed p;
    std::vector<double> data;
    for (const TensorD* t : parts) {
      p.shapes.push_back(t->shape());
      data.insert(data.end(), t->data().begin(), t->data().end());
    }
    const std::size_t n = data.size();
    p.flat = TensorD({n}, std::move(data));
    return p;
  }

  std::vector<TensorD> unpack(const TensorD& flat_values) const {
    std::vector<TensorD> out;
    std::size_t offset = 0;
    for (const auto& s : shapes) {
      const std::size_t n = checked_volume(s);
      std::vector<double> d(flat_values.data().begin() + static_cast<std::ptrdiff_t>(offset),
                            flat_values.data().begin() + static_cast<std::ptrdiff_t>(offset + n));
      out.emplace_back(s, std::move(d));
      offset += n;
    }
    return out;
  }
};

class Suite {
 public:
  explicit Suite(const GradCheckOptions& options) : options_(options), rng_(mix_seed(options.seed, 0x6c)) {}

  // `loss(parts)` evaluates the scalar objective; `grads(parts)` returns its
  // analytic gradient per part.
  void check(const std::string& name, const std::vector<const TensorD*>& point,
             const std::function<double(const std::vector<TensorD>&)>& loss,
             const std::function<std::vector<TensorD>(const std::vector<TensorD>&)>& grads) {
    const Packed packed = Packed::of(point);
    const auto parts = packed.unpack(packed.flat);
    std::vector<double> analytic;
    for (const auto& g : grads(parts)) analytic.insert(analytic.end(), g.data().begin(), g.data().end());
    if (name == options_.corrupt_layer) {
      for (auto& a : analytic) a = 1.5 * a + 0.01;
    }
    const std::size_t n = analytic.size();
    const TensorD analytic_flat({n}, std::move(analytic));
    const double err = grad_check([&](const TensorD& v) { return loss(packed.unpack(v)); }, analytic_flat, packed.flat);
    rows_.push_back({name, err, err < kGradCheckTolerance});
  }

  Rng& rng() { return rng_; }
  std::vector<GradCheckRow> rows() && { return std::move(rows_); }

 private:
  GradCheckOptions options_;
  Rng rng_;
  std::vector<GradCheckRow> rows_;
};

void check_conv(Suite& s) {
  const TensorD x = random_tensor(s.rng(), {2, 2, 5, 4});
  const TensorD w = random_tensor(s.rng(), {3, 2, 3, 3});
  const TensorD b = random_tensor(s.rng(), {3});
  for (std::size_t stride : {1, 2}) {
    const TensorD probe = random_tensor(s.rng(), {2, 3, (5 + stride - 1) / stride, (4 + stride - 1) / stride});
    s.check(stride == 1 ? "conv2d" : "conv2d_stride2", {&x, &w, &b},
            [&](const std::vector<TensorD>& p) {
              return dot(probe, conv2d_forward(p[0], LayerParams<double>{"c", p[1], p[2]}, stride, Padding::kSame));
            },
            [&](const std::vector<TensorD>& p) {
              Conv2dCache<double> cache;
              conv2d_forward(p[0], LayerParams<double>{"c", p[1], p[2]}, stride, Padding::kSame, &cache);
              auto g = conv2d_backward(cache, probe);
              return std::vector<TensorD>{g.grad_input, g.grad_weights, g.grad_bias};
            });
  }
}

void check_dense(Suite& s) {
  const TensorD x = random_tensor(s.rng(), {3, 4});
  const TensorD w = random_tensor(s.rng(), {4, 5});
  const TensorD b = random_tensor(s.rng(), {5});
  const TensorD probe = random_tensor(s.rng(), {3, 5});
  s.check("dense", {&x, &w, &b},
          [&](const std::vector<TensorD>& p) { return dot(probe, dense_forward(p[0], LayerParams<double>{"d", p[1], p[2]})); },
          [&](const std::vector<TensorD>& p) {
            DenseCache<double> cache;
            dense_forward(p[0], LayerParams<double>{"d", p[1], p[2]}, &cache);
            auto g = dense_backward(cache, probe);
            return std::vector<TensorD>{g.grad_input, g.grad_weights, g.grad_bias};
          });
}

void check_elementwise(Suite& s) {
  const TensorD x = away_from_zero(s.rng(), {2, 4});
  const TensorD probe = random_tensor(s.rng(), {2, 4});
  s.check("relu", {&x}, [&](const std::vector<TensorD>& p) { return dot(probe, relu_forward(p[0])); },
          [&](const std::vector<TensorD>& p) { return std::vector<TensorD>{relu_backward(p[0], probe)}; });
  const TensorD z = random_tensor(s.rng(), {2, 4}, -3.0, 3.0);
  s.check("sigmoid", {&z}, [&](const std::vector<TensorD>& p) { return dot(probe, sigmoid_forward(p[0])); },
          [&](const std::vector<TensorD>& p) { return std::vector<TensorD>{sigmoid_backward(sigmoid_forward(p[0]), probe)}; });
  s.check("softmax", {&z}, [&](const std::vector<TensorD>& p) { return dot(probe, softmax_forward(p[0])); },
          [&](const std::vector<TensorD>& p) { return std::vector<TensorD>{softmax_backward(softmax_forward(p[0]), probe)}; });
}

void check_gap(Suite& s) {
  const TensorD x = random_tensor(s.rng(), {2, 3, 2, 4});
  const TensorD probe = random_tensor(s.rng(), {2, 3});
  s.check("gap", {&x}, [&](const std::vector<TensorD>& p) { return dot(probe, gap_forward(p[0])); },
          [&](const std::vector<TensorD>& p) { return std::vector<TensorD>{gap_backward(p[0].shape(), probe)}; });
}

void check_dropout(Suite& s) {
  const TensorD x = random_tensor(s.rng(), {2, 4});
  const TensorD probe = random_tensor(s.rng(), {2, 4});
  const ForwardMode mode = ForwardMode::train(s.rng().next());
  s.check("dropout", {&x}, [&](const std::vector<TensorD>& p) { return dot(probe, dropout_forward(p[0], 0.4, mode).output); },
          [&](const std::vector<TensorD>& p) {
            return std::vector<TensorD>{dropout_backward(dropout_forward(p[0], 0.4, mode).mask, probe)};
          });
}

void check_maxpool(Suite& s) {
  // Distinct values 0.1 apart, shuffled: no window is within h of a tie.
  const Shape shape{1, 2, 4, 4};
  const auto order = shuffle_order(s.rng().next(), checked_volume(shape));
  TensorD x(shape, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.1 * static_cast<double>(order[i]) - 1.5;
  const TensorD probe = random_tensor(s.rng(), {1, 2, 2, 2});
  s.check("maxpool", {&x}, [&](const std::vector<TensorD>& p) { return dot(probe, maxpool2d_forward(p[0])); },
          [&](const std::vector<TensorD>& p) {
            MaxPoolCache<double> cache;
            maxpool2d_forward(p[0], &cache);
            return std::vector<TensorD>{maxpool2d_backward(cache, probe)};
          });
}

void check_attention(Suite& s) {
  const TensorD x = random_tensor(s.rng(), {2, 4, 3, 3});
  const TensorD rw = random_tensor(s.rng(), {2, 4, 1, 1});
  const TensorD rb = random_tensor(s.rng(), {2}, 0.1, 0.5);
  const TensorD ew = random_tensor(s.rng(), {4, 2, 1, 1});
  const TensorD eb = random_tensor(s.rng(), {4});
  const TensorD probe = random_tensor(s.rng(), {2, 4, 3, 3});
  auto params = [](const std::vector<TensorD>& p) {
    return AttentionParams<double>{{"attention.reduce", p[1], p[2]}, {"attention.expand", p[3], p[4]}};
  };
  s.check("channel_attention", {&x, &rw, &rb, &ew, &eb},
          [&](const std::vector<TensorD>& p) { return dot(probe, ca_forward(p[0], params(p)).output); },
          [&](const std::vector<TensorD>& p) {
            AttentionCache<double> cache;
            const auto ap = params(p);
            ca_forward(p[0], ap, &cache);
            auto g = ca_backward(cache, ap, probe);
            return std::vector<TensorD>{g.grad_input, g.params.reduce.weights, g.params.reduce.bias,
                                        g.params.expand.weights, g.params.expand.bias};
          });
}

void check_softmax_cross_entropy(Suite& s) {
  const TensorD logits = random_tensor(s.rng(), {3, 4}, -2.0, 2.0);
  const TensorD target = one_hot<double>({1, 3, 0}, 4);
  s.check("softmax_cross_entropy", {&logits},
          [&](const std::vector<TensorD>& p) { return cross_entropy(target, softmax_forward(p[0])); },
          [&](const std::vector<TensorD>& p) {
            return std::vector<TensorD>{softmax_cross_entropy_grad(softmax_forward(p[0]), target)};
          });
}

void check_model(Suite& s) {
  ModelConfig config;
  config.input_height = 6;
  config.input_width = 6;
  config.input_channels = 2;
  config.backbone = {{4, 3, true}};
  config.attention = true;
  config.attention_reduction = 2;
  config.head = {5};
  config.num_classes = 3;
  BasicModel<double> model = build_model<double>(config, s.rng().next());
  for (auto& p : model.params)
    for (std::size_t i = 0; i < p.bias.size(); ++i) p.bias[i] = s.rng().uniform(-0.2, 0.2);
  const TensorD x = random_tensor(s.rng(), {2, 2, 6, 6});
  const TensorD target = one_hot<double>({2, 0}, 3);
  const ForwardMode mode = ForwardMode::train(s.rng().next());
  std::vector<const TensorD*> point;
  for (const auto& p : model.params) {
    point.push_back(&p.weights);
    point.push_back(&p.bias);
  }
  auto rebuild = [&](const std::vector<TensorD>& parts) {
    BasicModel<double> m = model;
    for (std::size_t i = 0; i < m.params.size(); ++i) {
      m.params[i].weights = parts[2 * i];
      m.params[i].bias = parts[2 * i + 1];
    }
    return m;
  };
  s.check("model", point,
          [&](const std::vector<TensorD>& p) { return cross_entropy(target, forward(rebuild(p), x, mode)); },
          [&](const std::vector<TensorD>& p) {
            const BasicModel<double> m = rebuild(p);
            ForwardTrace<double> trace;
            const TensorD probs = forward(m, x, mode, &trace);
            std::vector<TensorD> out;
            for (auto& g : backward(m, trace, softmax_cross_entropy_grad(probs, target))) {
              out.push_back(std::move(g.weights));
              out.push_back(std::move(g.bias));
            }
            return out;
          });
}

}  // namespace

std::vector<GradCheckRow> run_gradcheck_suite(const GradCheckOptions& options) {
  Suite suite(options);
  check_conv(suite);
  check_dense(suite);
  check_elementwise(suite);
  check_gap(suite);
  check_dropout(suite);
  check_maxpool(suite);
  check_attention(suite);
  check_softmax_cross_entropy(suite);
  check_model(suite);
  return std::move(suite).rows();
}

std::vector<std::string> gradcheck_row_names() {
  return {"conv2d", "conv2d_stride2", "dense",   "relu",    "sigmoid",           "softmax",
          "gap",    "dropout",        "maxpool", "channel_attention", "softmax_cross_entropy", "model"};
}

}  // namespace aens
