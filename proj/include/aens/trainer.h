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

#ifndef AENS_TRAINER_H_
#define AENS_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "aens/data.h"
#include "aens/ensemble.h"
#include "aens/model.h"
#include "json.hpp"

namespace aens {

struct TrainConfig {
  double learning_rate = 1e-4;
  double momentum = 0.9;
  std::size_t batch_size = 16;
  std::size_t epochs = 20;
  std::uint64_t shuffle_seed = 0;
  AugmentConfig augment;
  double loss_clamp_eps = 1e-7;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& cfg);
void from_json(const nlohmann::json& j, TrainConfig& cfg);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  double wall_seconds = 0.0;

  TrainingSummary summary() const;
};

// CSV columns epoch,train_loss,train_acc,test_acc,seconds. With
// include_timing false the seconds column is written as 0 so the file is a
// pure function of the run configuration.
std::string format_history_csv(const TrainHistory& history, bool include_timing);
void write_history_csv(const TrainHistory& history, const std::string& path, bool include_timing);

// -(1/N) sum_n sum_j y_nj log(max(eps, yhat_nj)), natural log.
template <typename T>
double cross_entropy(const Tensor<T>& one_hot, const Tensor<T>& probs, double clamp_eps = 1e-7);

template <typename T>
Tensor<T> one_hot(const std::vector<std::size_t>& labels, std::size_t num_classes);

// Gradient of cross_entropy(softmax(logits)) w.r.t. the logits: (probs - y) / N.
template <typename T>
Tensor<T> softmax_cross_entropy_grad(const Tensor<T>& probs, const Tensor<T>& one_hot);

struct SgdConfig {
  double learning_rate = 1e-4;
  double momentum = 0.9;
};

// Classical momentum, in place: v <- momentum * v - lr * g; w <- w + v.
// Layers named in `frozen` are left untouched. Throws NumericError naming
// the layer when a gradient is not finite.
template <typename T>
void sgd_momentum_step(std::vector<LayerParams<T>>& params, const std::vector<LayerParams<T>>& grads,
                       std::vector<LayerParams<T>>& velocity, const SgdConfig& cfg,
                       const std::set<std::string>& frozen = {});

// Zero velocity buffers shaped like `params`.
template <typename T>
std::vector<LayerParams<T>> zero_velocity(const std::vector<LayerParams<T>>& params);

// Sample image resized (if needed) to the model input.
TensorF model_input(const Sample& sample, const ModelConfig& config);

struct TrainResult {
  Model model;
  TrainHistory history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Deterministic given (model, datasets, cfg): per epoch a shuffle keyed by
// (shuffle_seed, epoch), per-sample augmentation keyed by sample id, train-
// mode forward, and an SGD step on every unfrozen layer per batch (the last
// partial batch included). An empty test set reports test accuracy 0.
TrainResult train(Model model, const Dataset& train_set, const Dataset& test_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

struct EvalResult {
  double accuracy = 0.0;
  PredictionMatrix predictions;
};

// Eval-mode predictions in dataset order, no augmentation.
EvalResult evaluate(const Model& model, const Dataset& dataset, const std::string& model_name = "model");

}  // namespace aens

#endif  // AENS_TRAINER_H_
