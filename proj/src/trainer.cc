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

#include "aens/trainer.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "aens/parallel.h"
#include "aens/random.h"
#include "json_util.h"

namespace aens {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("train.learning_rate must be finite and >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train.momentum must lie in [0, 1)");
  if (batch_size < 1) throw ConfigError("train.batch_size must be at least 1");
  if (!(loss_clamp_eps > 0.0 && loss_clamp_eps < 1.0)) throw ConfigError("train.loss_clamp_eps must lie in (0, 1)");
  augment.validate();
}

void to_json(nlohmann::json& j, const TrainConfig& cfg) {
  j = {{"learning_rate", cfg.learning_rate}, {"momentum", cfg.momentum},       {"batch_size", cfg.batch_size},
       {"epochs", cfg.epochs},               {"shuffle_seed", cfg.shuffle_seed}, {"augment", cfg.augment},
       {"loss_clamp_eps", cfg.loss_clamp_eps}};
}

void from_json(const nlohmann::json& j, TrainConfig& cfg) {
  constexpr std::string_view ctx = "train";
  json_util::require_keys(
      j, {"learning_rate", "momentum", "batch_size", "epochs", "shuffle_seed", "augment", "loss_clamp_eps"}, ctx);
  json_util::read_optional(j, "learning_rate", cfg.learning_rate, ctx);
  json_util::read_optional(j, "momentum", cfg.momentum, ctx);
  json_util::read_optional(j, "batch_size", cfg.batch_size, ctx);
  json_util::read_optional(j, "epochs", cfg.epochs, ctx);
  json_util::read_optional(j, "shuffle_seed", cfg.shuffle_seed, ctx);
  if (j.contains("augment")) cfg.augment = j.at("augment").get<AugmentConfig>();
  json_util::read_optional(j, "loss_clamp_eps", cfg.loss_clamp_eps, ctx);
}

TrainingSummary TrainHistory::summary() const {
  TrainingSummary s;
  s.epochs = epochs.size();
  if (!epochs.empty()) {
    s.final_train_loss = epochs.back().train_loss;
    s.final_train_accuracy = epochs.back().train_accuracy;
    s.final_test_accuracy = epochs.back().test_accuracy;
  }
  return s;
}

std::string format_history_csv(const TrainHistory& history, bool include_timing) {
  std::string out = "epoch,train_loss,train_acc,test_acc,seconds\n";
  char buf[160];
  for (const auto& e : history.epochs) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g,%.6g\n", e.epoch, e.train_loss, e.train_accuracy,
                  e.test_accuracy, include_timing ? e.seconds : 0.0);
    out += buf;
  }
  return out;
}

void write_history_csv(const TrainHistory& history, const std::string& path, bool include_timing) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << format_history_csv(history, include_timing);
  if (!out) throw IoError("failed writing " + path);
}

template <typename T>
double cross_entropy(const Tensor<T>& one_hot, const Tensor<T>& probs, double clamp_eps) {
  require_same_shape(one_hot.shape(), probs.shape(), "cross_entropy");
  if (one_hot.rank() != 2) throw ShapeError("cross_entropy expects [N, K] tensors");
  const std::size_t n = probs.dim(0), k = probs.dim(1);
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    double row = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double y = one_hot[r * k + j];
      if (y == 0.0) continue;
      const double p = std::clamp(static_cast<double>(probs[r * k + j]), clamp_eps, 1.0);
      row += y * std::log(p);
    }
    total += row;
  }
  return -total / static_cast<double>(n);
}

template <typename T>
Tensor<T> one_hot(const std::vector<std::size_t>& labels, std::size_t num_classes) {
  Tensor<T> out({labels.size(), num_classes}, T(0));
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] >= num_classes) {
      throw ShapeError("label " + std::to_string(labels[r]) + " out of range for " + std::to_string(num_classes) + " classes");
    }
    out[r * num_classes + labels[r]] = T(1);
  }
  return out;
}

template <typename T>
Tensor<T> softmax_cross_entropy_grad(const Tensor<T>& probs, const Tensor<T>& one_hot) {
  require_same_shape(probs.shape(), one_hot.shape(), "softmax_cross_entropy_grad");
  const T inv_n = T(1) / static_cast<T>(probs.dim(0));
  Tensor<T> out(probs.shape(), T(0));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (probs[i] - one_hot[i]) * inv_n;
  return out;
}

template <typename T>
std::vector<LayerParams<T>> zero_velocity(const std::vector<LayerParams<T>>& params) {
  std::vector<LayerParams<T>> v;
  for (const auto& p : params) v.push_back({p.name, Tensor<T>(p.weights.shape(), T(0)), Tensor<T>(p.bias.shape(), T(0))});
  return v;
}

namespace {

template <typename T>
void momentum_update(Tensor<T>& w, const Tensor<T>& g, Tensor<T>& v, T lr, T momentum, const std::string& layer) {
  require_same_shape(w.shape(), g.shape(), ("sgd gradient for " + layer).c_str());
  require_same_shape(w.shape(), v.shape(), ("sgd velocity for " + layer).c_str());
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!std::isfinite(g[i])) throw NumericError("non-finite gradient in layer " + layer);
  }
  for (std::size_t i = 0; i < w.size(); ++i) {
    v[i] = momentum * v[i] - lr * g[i];
    w[i] = w[i] + v[i];
  }
}

}  // namespace

template <typename T>
void sgd_momentum_step(std::vector<LayerParams<T>>& params, const std::vector<LayerParams<T>>& grads,
                       std::vector<LayerParams<T>>& velocity, const SgdConfig& cfg,
                       const std::set<std::string>& frozen) {
  if (grads.size() != params.size() || velocity.size() != params.size()) {
    throw ShapeError("sgd step: params, grads and velocity must list the same layers");
  }
  const T lr = static_cast<T>(cfg.learning_rate);
  const T momentum = static_cast<T>(cfg.momentum);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (frozen.count(p.name)) continue;
    if (grads[i].name != p.name || velocity[i].name != p.name) {
      throw ShapeError("sgd step: layer order mismatch at " + p.name);
    }
    momentum_update(p.weights, grads[i].weights, velocity[i].weights, lr, momentum, p.name);
    momentum_update(p.bias, grads[i].bias, velocity[i].bias, lr, momentum, p.name);
  }
}

TensorF model_input(const Sample& sample, const ModelConfig& config) {
  const TensorF& img = sample.image;
  if (img.rank() != 3 || img.dim(0) != config.input_channels) {
    throw ShapeError("sample " + sample.id + " has image shape " + shape_string(img.shape()) + ", model expects " +
                     std::to_string(config.input_channels) + " channels");
  }
  if (img.dim(1) == config.input_height && img.dim(2) == config.input_width) return img;
  return resize_bilinear(img, config.input_height, config.input_width);
}

namespace {

void check_class_space(const Model& model, const Dataset& ds, const char* what) {
  if (!ds.samples.empty() && ds.num_classes() != model.config.num_classes) {
    throw ShapeError(std::string(what) + " has " + std::to_string(ds.num_classes()) + " classes, model has " +
                     std::to_string(model.config.num_classes));
  }
  for (const auto& s : ds.samples) {
    if (s.label >= model.config.num_classes) throw ShapeError(std::string(what) + " sample " + s.id + " has an out-of-range label");
  }
}

// Copies prepared [C, H, W] images into one [B, C, H, W] batch.
TensorF assemble(const std::vector<TensorF>& images) {
  const Shape& s = images.front().shape();
  const std::size_t per = images.front().size();
  TensorF batch({images.size(), s[0], s[1], s[2]}, 0.0f);
  for (std::size_t i = 0; i < images.size(); ++i) std::copy_n(images[i].raw(), per, batch.raw() + i * per);
  return batch;
}

}  // namespace

TrainResult train(Model model, const Dataset& train_set, const Dataset& test_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  check_class_space(model, train_set, "train set");
  check_class_space(model, test_set, "test set");
  TrainResult result{std::move(model), {}};
  Model& m = result.model;
  const auto run_start = std::chrono::steady_clock::now();

  std::vector<TensorF> inputs;
  inputs.reserve(train_set.size());
  for (const auto& s : train_set.samples) inputs.push_back(model_input(s, m.config));

  auto velocity = zero_velocity(m.params);
  const SgdConfig sgd{cfg.learning_rate, cfg.momentum};
  const std::size_t k = m.config.num_classes;
  const std::size_t n = train_set.size();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    const auto order = shuffle_order(mix_seed(cfg.shuffle_seed, epoch), n);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t begin = 0, batch_index = 0; begin < n; begin += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(n, begin + cfg.batch_size);
      std::vector<TensorF> images(end - begin);
      std::vector<std::size_t> labels(end - begin);
      parallel_for(end - begin, [&](std::size_t i) {
        const Sample& s = train_set.samples[order[begin + i]];
        images[i] = augment(inputs[order[begin + i]], cfg.augment, sample_seed(cfg.shuffle_seed, epoch, s.id));
        labels[i] = s.label;
      });
      try {
        const TensorF batch = assemble(images);
        const TensorF target = one_hot<float>(labels, k);
        ForwardTrace<float> trace;
        const TensorF probs = forward(m, batch, ForwardMode::train(mix_seed(cfg.shuffle_seed, epoch, batch_index)), &trace);
        const double loss = cross_entropy(target, probs, cfg.loss_clamp_eps);
        if (!std::isfinite(loss)) throw NumericError("non-finite training loss");
        loss_sum += loss * static_cast<double>(labels.size());
        for (std::size_t r = 0; r < labels.size(); ++r) {
          std::size_t best = 0;
          for (std::size_t j = 1; j < k; ++j)
            if (probs[r * k + j] > probs[r * k + best]) best = j;
          correct += best == labels[r];
        }
        const auto grads = backward(m, trace, softmax_cross_entropy_grad(probs, target));
        sgd_momentum_step(m.params, grads, velocity, sgd, m.frozen);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch + 1) + ", batch " + std::to_string(batch_index) + ": " + e.what());
      }
    }
    EpochRecord record;
    record.epoch = epoch + 1;
    record.train_loss = n ? loss_sum / static_cast<double>(n) : 0.0;
    record.train_accuracy = n ? static_cast<double>(correct) / static_cast<double>(n) : 0.0;
    record.test_accuracy = test_set.samples.empty() ? 0.0 : evaluate(m, test_set).accuracy;
    record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count();
    result.history.epochs.push_back(record);
    if (on_epoch) on_epoch(record);
  }
  result.history.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - run_start).count();
  return result;
}

EvalResult evaluate(const Model& model, const Dataset& dataset, const std::string& model_name) {
  check_class_space(model, dataset, "evaluation set");
  constexpr std::size_t kEvalBatch = 32;
  const std::size_t k = model.config.num_classes;
  const std::size_t n = dataset.size();
  EvalResult result;
  result.predictions.model_name = model_name;
  result.predictions.sample_ids = dataset.ids();
  if (n == 0) return result;
  std::vector<double> probs(n * k);
  for (std::size_t begin = 0; begin < n; begin += kEvalBatch) {
    const std::size_t end = std::min(n, begin + kEvalBatch);
    std::vector<TensorF> images;
    for (std::size_t i = begin; i < end; ++i) images.push_back(model_input(dataset.samples[i], model.config));
    const TensorF p = forward(model, assemble(images), ForwardMode::eval());
    std::copy(p.data().begin(), p.data().end(), probs.begin() + static_cast<std::ptrdiff_t>(begin * k));
  }
  result.predictions.probs = TensorD({n, k}, std::move(probs));
  result.accuracy = accuracy(result.predictions, dataset.labels());
  return result;
}

#define AENS_INSTANTIATE(T)                                                                                  \
  template double cross_entropy(const Tensor<T>&, const Tensor<T>&, double);                                \
  template Tensor<T> one_hot<T>(const std::vector<std::size_t>&, std::size_t);                              \
  template Tensor<T> softmax_cross_entropy_grad(const Tensor<T>&, const Tensor<T>&);                        \
  template void sgd_momentum_step(std::vector<LayerParams<T>>&, const std::vector<LayerParams<T>>&,         \
                                  std::vector<LayerParams<T>>&, const SgdConfig&, const std::set<std::string>&); \
  template std::vector<LayerParams<T>> zero_velocity(const std::vector<LayerParams<T>>&);

AENS_INSTANTIATE(float)
AENS_INSTANTIATE(double)

#undef AENS_INSTANTIATE

}  // namespace aens
