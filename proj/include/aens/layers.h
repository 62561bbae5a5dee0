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

#ifndef AENS_LAYERS_H_
#define AENS_LAYERS_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "aens/tensor.h"

namespace aens {

// Learnable parameters of one layer. Convolutions store weights as
// [C_out, C_in, kh, kw], dense layers as [D, U]; bias has one entry per
// output channel or unit.
template <typename T>
struct LayerParams {
  std::string name;
  Tensor<T> weights;
  Tensor<T> bias;

  template <typename U>
  LayerParams<U> cast() const {
    return {name, weights.template cast<U>(), bias.template cast<U>()};
  }
  bool operator==(const LayerParams&) const = default;
};

enum class Phase { kTrain, kEval };

// Dropout is active only in train mode; its mask is a pure function of
// dropout_seed.
struct ForwardMode {
  Phase phase = Phase::kEval;
  std::uint64_t dropout_seed = 0;

  static ForwardMode eval() { return {}; }
  static ForwardMode train(std::uint64_t seed) { return {Phase::kTrain, seed}; }
  bool training() const { return phase == Phase::kTrain; }
};

// Gradients of a parameterized layer with respect to its input and params.
template <typename T>
struct LayerGrads {
  Tensor<T> grad_input;
  Tensor<T> grad_weights;
  Tensor<T> grad_bias;
};

// ---------------------------------------------------------------------------
// 2-D convolution (cross-correlation, no kernel flip).

enum class Padding { kSame, kValid };

struct ConvGeometry {
  std::size_t batch = 0;
  std::size_t in_channels = 0, in_h = 0, in_w = 0;
  std::size_t out_channels = 0, kernel_h = 0, kernel_w = 0;
  std::size_t stride = 1;
  std::size_t pad_top = 0, pad_left = 0;
  std::size_t out_h = 0, out_w = 0;
};

// `same` gives out = ceil(in / stride) with symmetric zero padding; an odd
// total puts the extra row/column on the bottom/right.
ConvGeometry conv_geometry(const Shape& input, const Shape& weights, std::size_t stride,
                           Padding padding);

template <typename T>
struct Conv2dCache {
  Tensor<T> input;
  Tensor<T> weights;
  ConvGeometry geometry;
};

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const LayerParams<T>& p, std::size_t stride,
                         Padding padding, Conv2dCache<T>* cache = nullptr);

template <typename T>
LayerGrads<T> conv2d_backward(const Conv2dCache<T>& cache, const Tensor<T>& grad_out);

// ---------------------------------------------------------------------------
// Dense: y = xW + b for x [N, D], W [D, U].

template <typename T>
struct DenseCache {
  Tensor<T> input;
  Tensor<T> weights;
};

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const LayerParams<T>& p,
                        DenseCache<T>* cache = nullptr);

template <typename T>
LayerGrads<T> dense_backward(const DenseCache<T>& cache, const Tensor<T>& grad_out);

// ---------------------------------------------------------------------------
// Elementwise activations. relu'(0) is taken as 0.

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x);
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out);

template <typename T>
Tensor<T> sigmoid_forward(const Tensor<T>& x);
// `y` is the forward output.
template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& y, const Tensor<T>& grad_out);

// Row-wise softmax over [N, K] with max subtraction. Throws NumericError on
// non-finite logits.
template <typename T>
Tensor<T> softmax_forward(const Tensor<T>& logits);
// `probs` is the forward output.
template <typename T>
Tensor<T> softmax_backward(const Tensor<T>& probs, const Tensor<T>& grad_out);

// ---------------------------------------------------------------------------
// Global average pooling [N, C, H, W] -> [N, C].

template <typename T>
Tensor<T> gap_forward(const Tensor<T>& x);
template <typename T>
Tensor<T> gap_backward(const Shape& input_shape, const Tensor<T>& grad_out);

// ---------------------------------------------------------------------------
// Inverted dropout. The mask holds 0 or 1/(1 - rate) per element.

template <typename T>
struct DropoutResult {
  Tensor<T> output;
  Tensor<T> mask;
};

template <typename T>
DropoutResult<T> dropout_forward(const Tensor<T>& x, double rate, const ForwardMode& mode);
template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& mask, const Tensor<T>& grad_out);

// ---------------------------------------------------------------------------
// 2x2 max pooling, stride 2. Odd trailing rows/columns are dropped. Ties go
// to the first element in row-major scan order.

inline constexpr std::size_t kPoolWindow = 2;

template <typename T>
struct MaxPoolCache {
  Shape input_shape;
  std::vector<std::size_t> argmax;  // flat input index per output element
};

template <typename T>
Tensor<T> maxpool2d_forward(const Tensor<T>& x, MaxPoolCache<T>* cache = nullptr);
template <typename T>
Tensor<T> maxpool2d_backward(const MaxPoolCache<T>& cache, const Tensor<T>& grad_out);

}  // namespace aens

#endif  // AENS_LAYERS_H_
