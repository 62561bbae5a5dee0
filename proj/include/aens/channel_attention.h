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

#ifndef AENS_CHANNEL_ATTENTION_H_
#define AENS_CHANNEL_ATTENTION_H_

#include <cstddef>

#include "aens/layers.h"
#include "aens/tensor.h"

namespace aens {

// Channel attention block: squeeze by global average pooling, 1x1 conv down to
// channels / reduction, ReLU, 1x1 conv back up to channels, sigmoid, then
// scale every input channel by its gate. Output shape equals input shape.
struct AttentionConfig {
  std::size_t channels = 0;
  std::size_t reduction = 4;

  std::size_t bottleneck() const { return reduction == 0 ? 0 : channels / reduction; }
  // Throws ConfigError unless reduction >= 1 and channels / reduction >= 1.
  void validate() const;
};

template <typename T>
struct AttentionParams {
  LayerParams<T> reduce;  // [C/r, C, 1, 1]
  LayerParams<T> expand;  // [C, C/r, 1, 1]
};

// All-zero parameters with the right shapes.
template <typename T>
AttentionParams<T> zero_attention_params(const AttentionConfig& config);

template <typename T>
struct AttentionCache {
  Tensor<T> input;
  Conv2dCache<T> reduce;
  Tensor<T> reduce_out;  // pre-ReLU
  Conv2dCache<T> expand;
  Tensor<T> gate;  // [N, C]
};

template <typename T>
struct AttentionOutput {
  Tensor<T> output;  // [N, C, H, W]
  Tensor<T> gate;    // [N, C], each entry in (0, 1)
};

template <typename T>
struct AttentionGrads {
  Tensor<T> grad_input;
  AttentionParams<T> params;  // gradients, same names and shapes as the params
};

template <typename T>
AttentionOutput<T> ca_forward(const Tensor<T>& x, const AttentionParams<T>& p,
                              AttentionCache<T>* cache = nullptr);

template <typename T>
AttentionGrads<T> ca_backward(const AttentionCache<T>& cache, const AttentionParams<T>& p,
                              const Tensor<T>& grad_y);

}  // namespace aens

#endif  // AENS_CHANNEL_ATTENTION_H_
