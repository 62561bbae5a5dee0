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

#include "aens/channel_attention.h"

#include <string>

namespace aens {

void AttentionConfig::validate() const {
  if (reduction == 0) throw ConfigError("attention reduction ratio must be at least 1");
  if (bottleneck() == 0) {
    throw ConfigError("attention bottleneck is empty: " + std::to_string(channels) +
                      " channels with reduction " + std::to_string(reduction));
  }
}

template <typename T>
AttentionParams<T> zero_attention_params(const AttentionConfig& config) {
  config.validate();
  const std::size_t c = config.channels, b = config.bottleneck();
  return {{"attention.reduce", Tensor<T>({b, c, 1, 1}, T(0)), Tensor<T>({b}, T(0))},
          {"attention.expand", Tensor<T>({c, b, 1, 1}, T(0)), Tensor<T>({c}, T(0))}};
}

template <typename T>
AttentionOutput<T> ca_forward(const Tensor<T>& x, const AttentionParams<T>& p,
                              AttentionCache<T>* cache) {
  if (x.rank() != 4) throw ShapeError("attention input must be [N, C, H, W], got " + shape_string(x.shape()));
  const std::size_t n = x.dim(0), c = x.dim(1);
  if (p.reduce.weights.rank() != 4 || p.reduce.weights.dim(1) != c || p.expand.weights.rank() != 4 ||
      p.expand.weights.dim(0) != c) {
    throw ShapeError("attention channel mismatch: input has " + std::to_string(c) +
                     " channels, params are " + shape_string(p.reduce.weights.shape()) + " / " +
                     shape_string(p.expand.weights.shape()));
  }
  const Tensor<T> squeezed = gap_forward(x).reshape({n, c, 1, 1});
  Conv2dCache<T> reduce_cache, expand_cache;
  Tensor<T> reduced = conv2d_forward(squeezed, p.reduce, 1, Padding::kValid, &reduce_cache);
  Tensor<T> expanded =
      conv2d_forward(relu_forward(reduced), p.expand, 1, Padding::kValid, &expand_cache);
  Tensor<T> gate = sigmoid_forward(expanded).reshape({n, c});

  const std::size_t area = x.dim(2) * x.dim(3);
  Tensor<T> y(x.shape(), T(0));
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const T s = gate[plane];
    const T* in = x.raw() + plane * area;
    T* out = y.raw() + plane * area;
    for (std::size_t i = 0; i < area; ++i) out[i] = s * in[i];
  }
  if (cache) {
    *cache = {x, std::move(reduce_cache), std::move(reduced), std::move(expand_cache), gate};
  }
  return {std::move(y), std::move(gate)};
}

template <typename T>
AttentionGrads<T> ca_backward(const AttentionCache<T>& cache, const AttentionParams<T>& p,
                              const Tensor<T>& grad_y) {
  require_same_shape(grad_y.shape(), cache.input.shape(), "ca_backward grad_y");
  const std::size_t n = cache.input.dim(0), c = cache.input.dim(1);
  const std::size_t area = cache.input.dim(2) * cache.input.dim(3);

  // Scaling path, and dL/ds accumulated over each channel plane.
  Tensor<T> grad_x(cache.input.shape(), T(0));
  Tensor<T> grad_gate({n, c, 1, 1}, T(0));
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const T s = cache.gate[plane];
    const T* x = cache.input.raw() + plane * area;
    const T* g = grad_y.raw() + plane * area;
    T* gx = grad_x.raw() + plane * area;
    T acc = 0;
    for (std::size_t i = 0; i < area; ++i) {
      gx[i] = s * g[i];
      acc += g[i] * x[i];
    }
    grad_gate[plane] = acc;
  }

  // Attention-vector path back through sigmoid, expand, ReLU, reduce, GAP.
  const Tensor<T> grad_expanded = sigmoid_backward(cache.gate.reshape({n, c, 1, 1}), grad_gate);
  LayerGrads<T> expand = conv2d_backward(cache.expand, grad_expanded);
  const Tensor<T> grad_reduced = relu_backward(cache.reduce_out, expand.grad_input);
  LayerGrads<T> reduce = conv2d_backward(cache.reduce, grad_reduced);
  const Tensor<T> grad_squeeze = gap_backward(cache.input.shape(), reduce.grad_input.reshape({n, c}));

  AttentionGrads<T> grads;
  grads.grad_input = add(grad_x, grad_squeeze);
  grads.params.reduce = {p.reduce.name, std::move(reduce.grad_weights), std::move(reduce.grad_bias)};
  grads.params.expand = {p.expand.name, std::move(expand.grad_weights), std::move(expand.grad_bias)};
  return grads;
}

#define AENS_INSTANTIATE(T)                                                             \
  template AttentionParams<T> zero_attention_params(const AttentionConfig&);            \
  template AttentionOutput<T> ca_forward(const Tensor<T>&, const AttentionParams<T>&,   \
                                         AttentionCache<T>*);                           \
  template AttentionGrads<T> ca_backward(const AttentionCache<T>&, const AttentionParams<T>&, \
                                         const Tensor<T>&);

AENS_INSTANTIATE(float)
AENS_INSTANTIATE(double)

#undef AENS_INSTANTIATE

}  // namespace aens
