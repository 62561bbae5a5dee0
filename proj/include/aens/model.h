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

#ifndef AENS_MODEL_H_
#define AENS_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "aens/channel_attention.h"
#include "aens/layers.h"
#include "aens/tensor.h"

namespace aens {

// conv(same, stride 1) -> ReLU -> optional 2x2 max-pool.
struct ConvBlockSpec {
  std::size_t out_channels = 16;
  std::size_t kernel = 3;
  bool pool = true;
  bool operator==(const ConvBlockSpec&) const = default;
};

struct ModelConfig {
  std::size_t input_height = 48;
  std::size_t input_width = 48;
  std::size_t input_channels = 3;
  std::vector<ConvBlockSpec> backbone = {{16, 3, true}, {32, 3, true}, {64, 3, true}};
  bool attention = true;
  std::size_t attention_reduction = 4;
  std::vector<std::size_t> head = {128};  // hidden FC widths, each followed by ReLU + dropout
  double dropout_rate = 0.4;
  std::size_t num_classes = 40;

  // Desk-scale default backbone at the given input size.
  static ModelConfig desk_scale(std::size_t num_classes, std::size_t input_size = 48);
  // Same topology at 512x512 input.
  static ModelConfig full_scale(std::size_t num_classes = 40);

  // Channel count entering attention / GAP.
  std::size_t feature_channels() const;
  // Throws ConfigError on any invariant violation, including spatial collapse.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

void to_json(nlohmann::json& j, const ModelConfig& config);
// Rejects unknown keys; missing keys keep their defaults.
void from_json(const nlohmann::json& j, ModelConfig& config);

// Ordered layer names for a config: backbone.conv<i>, attention.reduce,
// attention.expand, head.fc<i>, head.logits.
std::vector<std::string> layer_names(const ModelConfig& config);

template <typename T>
struct BasicModel {
  ModelConfig config;
  std::vector<LayerParams<T>> params;
  std::set<std::string> frozen;

  std::size_t index_of(std::string_view name) const;
  const LayerParams<T>& layer(std::string_view name) const { return params[index_of(name)]; }
  LayerParams<T>& layer(std::string_view name) { return params[index_of(name)]; }
  bool is_frozen(std::string_view name) const { return frozen.count(std::string(name)) != 0; }
  std::size_t parameter_count() const;

  template <typename U>
  BasicModel<U> cast() const {
    BasicModel<U> out{config, {}, frozen};
    for (const auto& p : params) out.params.push_back(p.template cast<U>());
    return out;
  }
};

using Model = BasicModel<float>;

// He-uniform for layers feeding ReLU, Xavier-uniform for attention.expand and
// head.logits, zero biases. Fully determined by (config, seed).
template <typename T = float>
BasicModel<T> build_model(const ModelConfig& config, std::uint64_t seed);

template <typename T>
struct ForwardTrace {
  std::vector<Conv2dCache<T>> conv;
  std::vector<Tensor<T>> conv_out;  // pre-ReLU
  std::vector<MaxPoolCache<T>> pool;
  AttentionCache<T> attention;
  Shape feature_shape;  // input to GAP
  std::vector<DenseCache<T>> fc;
  std::vector<Tensor<T>> fc_out;  // pre-ReLU
  std::vector<Tensor<T>> dropout_mask;
  DenseCache<T> logits_cache;
  Tensor<T> logits;
  Tensor<T> probs;
};

// Class probabilities [N, K] for a batch [N, C, H, W].
template <typename T>
Tensor<T> forward(const BasicModel<T>& model, const Tensor<T>& batch, const ForwardMode& mode,
                  ForwardTrace<T>* trace = nullptr);

// Parameter gradients given dL/dlogits, aligned with model.params. Layers
// below the lowest trainable layer are not visited and get zero gradients.
template <typename T>
std::vector<LayerParams<T>> backward(const BasicModel<T>& model, const ForwardTrace<T>& trace,
                                     const Tensor<T>& grad_logits);

enum class TransferPolicy { kFreezeBackbone, kFinetuneAll };

TransferPolicy parse_policy(std::string_view text);

struct HeadSpec {
  std::vector<std::size_t> hidden = {128};
  std::size_t num_classes = 2;
  double dropout_rate = 0.4;
};

// Copies backbone and attention parameters from `source` into a model built
// for `target` (fresh head from `seed`). kFreezeBackbone freezes the
// backbone.conv* layers. Throws TransferError naming the first incompatible
// layer.
Model transfer(const Model& source, const ModelConfig& target, TransferPolicy policy,
               std::uint64_t seed);
Model transfer(const Model& source, const HeadSpec& head, TransferPolicy policy,
               std::uint64_t seed);

// ---------------------------------------------------------------------------
// Checkpoints: "AENS", u32 version, u32 length + JSON block (config, frozen
// layers, training summary), u32 layer count, then per layer the name and
// the weight and bias tensors as u32 rank, u32 dims, little-endian float32.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct TrainingSummary {
  std::size_t epochs = 0;
  double final_train_loss = 0.0;
  double final_train_accuracy = 0.0;
  double final_test_accuracy = 0.0;
  bool operator==(const TrainingSummary&) const = default;
};

struct Checkpoint {
  Model model;
  TrainingSummary summary;
};

std::string encode_checkpoint(const Model& model, const TrainingSummary& summary = {});
Checkpoint decode_checkpoint(std::string_view bytes);

void save(const Model& model, const std::string& path, const TrainingSummary& summary = {});
Checkpoint load_checkpoint(const std::string& path);
Model load(const std::string& path);

}  // namespace aens

#endif  // AENS_MODEL_H_
