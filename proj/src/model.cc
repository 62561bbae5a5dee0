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

#include "aens/model.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "aens/random.h"
#include "json_util.h"

namespace aens {
namespace {

enum class Init { kHe, kXavier };

struct LayerLayout {
  std::string name;
  Shape weights;
  Shape bias;
  std::size_t fan_in;
  std::size_t fan_out;
  Init init;
};

std::vector<LayerLayout> layout(const ModelConfig& c) {
  std::vector<LayerLayout> out;
  std::size_t channels = c.input_channels;
  for (std::size_t i = 0; i < c.backbone.size(); ++i) {
    const auto& b = c.backbone[i];
    out.push_back({"backbone.conv" + std::to_string(i),
                   {b.out_channels, channels, b.kernel, b.kernel},
                   {b.out_channels},
                   channels * b.kernel * b.kernel,
                   b.out_channels * b.kernel * b.kernel,
                   Init::kHe});
    channels = b.out_channels;
  }
  if (c.attention) {
    const std::size_t mid = channels / c.attention_reduction;
    out.push_back({"attention.reduce", {mid, channels, 1, 1}, {mid}, channels, mid, Init::kHe});
    out.push_back({"attention.expand", {channels, mid, 1, 1}, {channels}, mid, channels, Init::kXavier});
  }
  std::size_t width = channels;
  for (std::size_t i = 0; i < c.head.size(); ++i) {
    out.push_back({"head.fc" + std::to_string(i), {width, c.head[i]}, {c.head[i]}, width, c.head[i], Init::kHe});
    width = c.head[i];
  }
  out.push_back({"head.logits", {width, c.num_classes}, {c.num_classes}, width, c.num_classes, Init::kXavier});
  return out;
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

ModelConfig ModelConfig::desk_scale(std::size_t num_classes, std::size_t input_size) {
  ModelConfig c;
  c.num_classes = num_classes;
  c.input_height = c.input_width = input_size;
  return c;
}

ModelConfig ModelConfig::full_scale(std::size_t num_classes) {
  return desk_scale(num_classes, 512);
}

std::size_t ModelConfig::feature_channels() const {
  return backbone.empty() ? input_channels : backbone.back().out_channels;
}

void ModelConfig::validate() const {
  if (input_height == 0 || input_width == 0 || input_channels == 0) {
    throw ConfigError("model input size must be positive in every dimension");
  }
  if (num_classes < 2) throw ConfigError("num_classes must be at least 2");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout_rate must lie in [0, 1)");
  std::size_t h = input_height, w = input_width;
  for (std::size_t i = 0; i < backbone.size(); ++i) {
    if (backbone[i].out_channels == 0) throw ConfigError("backbone block " + std::to_string(i) + " has zero channels");
    if (backbone[i].kernel == 0) throw ConfigError("backbone block " + std::to_string(i) + " has zero kernel size");
    if (backbone[i].pool) {
      if (h < kPoolWindow || w < kPoolWindow) {
        throw ConfigError("spatial collapse: backbone.pool" + std::to_string(i) + " receives " +
                          std::to_string(h) + "x" + std::to_string(w) + " feature maps");
      }
      h /= kPoolWindow;
      w /= kPoolWindow;
    }
  }
  if (attention) AttentionConfig{feature_channels(), attention_reduction}.validate();
  for (std::size_t width : head) {
    if (width == 0) throw ConfigError("head widths must be at least 1");
  }
}

void to_json(nlohmann::json& j, const ConvBlockSpec& b) {
  j = {{"out_channels", b.out_channels}, {"kernel", b.kernel}, {"pool", b.pool}};
}

void from_json(const nlohmann::json& j, ConvBlockSpec& b) {
  json_util::require_keys(j, {"out_channels", "kernel", "pool"}, "model.backbone[]");
  json_util::read_required(j, "out_channels", b.out_channels, "model.backbone[]");
  json_util::read_optional(j, "kernel", b.kernel, "model.backbone[]");
  json_util::read_optional(j, "pool", b.pool, "model.backbone[]");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"input_size", {{"height", c.input_height}, {"width", c.input_width}, {"channels", c.input_channels}}},
       {"backbone", c.backbone},
       {"attention", {{"enabled", c.attention}, {"reduction", c.attention_reduction}}},
       {"head", c.head},
       {"dropout_rate", c.dropout_rate},
       {"num_classes", c.num_classes}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  constexpr std::string_view ctx = "model";
  json_util::require_keys(j, {"input_size", "backbone", "attention", "head", "dropout_rate", "num_classes"}, ctx);
  if (const auto it = j.find("input_size"); it != j.end()) {
    json_util::require_keys(*it, {"height", "width", "channels"}, "model.input_size");
    json_util::read_optional(*it, "height", c.input_height, "model.input_size");
    json_util::read_optional(*it, "width", c.input_width, "model.input_size");
    json_util::read_optional(*it, "channels", c.input_channels, "model.input_size");
  }
  if (const auto it = j.find("backbone"); it != j.end()) {
    if (!it->is_array()) throw ConfigError("model.backbone: expected an array");
    c.backbone.clear();
    for (const auto& block : *it) c.backbone.push_back(block.get<ConvBlockSpec>());
  }
  if (const auto it = j.find("attention"); it != j.end()) {
    json_util::require_keys(*it, {"enabled", "reduction"}, "model.attention");
    json_util::read_optional(*it, "enabled", c.attention, "model.attention");
    json_util::read_optional(*it, "reduction", c.attention_reduction, "model.attention");
  }
  json_util::read_optional(j, "head", c.head, ctx);
  json_util::read_optional(j, "dropout_rate", c.dropout_rate, ctx);
  json_util::read_optional(j, "num_classes", c.num_classes, ctx);
}

std::vector<std::string> layer_names(const ModelConfig& config) {
  std::vector<std::string> names;
  for (auto& l : layout(config)) names.push_back(std::move(l.name));
  return names;
}

// ---------------------------------------------------------------------------
// Model

template <typename T>
std::size_t BasicModel<T>::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i].name == name) return i;
  throw ShapeError("model has no layer named " + std::string(name));
}

template <typename T>
std::size_t BasicModel<T>::parameter_count() const {
  std::size_t total = 0;
  for (const auto& p : params) total += p.weights.size() + p.bias.size();
  return total;
}

template <typename T>
BasicModel<T> build_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  BasicModel<T> model{config, {}, {}};
  const auto layers = layout(config);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerLayout& l = layers[i];
    const double limit = l.init == Init::kHe ? std::sqrt(6.0 / static_cast<double>(l.fan_in))
                                             : std::sqrt(6.0 / static_cast<double>(l.fan_in + l.fan_out));
    Rng rng(mix_seed(seed, i));
    Tensor<T> weights(l.weights, T(0));
    for (std::size_t k = 0; k < weights.size(); ++k) weights[k] = static_cast<T>(rng.uniform(-limit, limit));
    model.params.push_back({l.name, std::move(weights), Tensor<T>(l.bias, T(0))});
  }
  return model;
}

template <typename T>
Tensor<T> forward(const BasicModel<T>& model, const Tensor<T>& batch, const ForwardMode& mode,
                  ForwardTrace<T>* trace) {
  const ModelConfig& c = model.config;
  if (batch.rank() != 4 || batch.dim(1) != c.input_channels || batch.dim(2) != c.input_height ||
      batch.dim(3) != c.input_width) {
    throw ShapeError("model expects input [N," + std::to_string(c.input_channels) + "," +
                     std::to_string(c.input_height) + "," + std::to_string(c.input_width) + "], got " +
                     shape_string(batch.shape()));
  }
  ForwardTrace<T> local;
  ForwardTrace<T>& t = trace ? *trace : local;
  const bool keep = trace != nullptr;
  t = ForwardTrace<T>{};
  t.conv.resize(c.backbone.size());
  t.conv_out.resize(c.backbone.size());
  t.pool.resize(c.backbone.size());

  std::size_t layer = 0;
  Tensor<T> x = batch;
  for (std::size_t i = 0; i < c.backbone.size(); ++i, ++layer) {
    Tensor<T> pre = conv2d_forward(x, model.params[layer], 1, Padding::kSame, keep ? &t.conv[i] : nullptr);
    x = relu_forward(pre);
    if (keep) t.conv_out[i] = std::move(pre);
    if (c.backbone[i].pool) x = maxpool2d_forward(x, keep ? &t.pool[i] : nullptr);
  }
  if (c.attention) {
    const AttentionParams<T> ap{model.params[layer], model.params[layer + 1]};
    x = ca_forward(x, ap, keep ? &t.attention : nullptr).output;
    layer += 2;
  }
  t.feature_shape = x.shape();
  x = gap_forward(x);
  for (std::size_t j = 0; j < c.head.size(); ++j, ++layer) {
    t.fc.emplace_back();
    Tensor<T> pre = dense_forward(x, model.params[layer], keep ? &t.fc.back() : nullptr);
    const ForwardMode layer_mode{mode.phase, mix_seed(mode.dropout_seed, j)};
    DropoutResult<T> dropped = dropout_forward(relu_forward(pre), c.dropout_rate, layer_mode);
    x = std::move(dropped.output);
    if (keep) {
      t.fc_out.push_back(std::move(pre));
      t.dropout_mask.push_back(std::move(dropped.mask));
    }
  }
  t.logits = dense_forward(x, model.params[layer], keep ? &t.logits_cache : nullptr);
  t.probs = softmax_forward(t.logits);
  return t.probs;
}

template <typename T>
std::vector<LayerParams<T>> backward(const BasicModel<T>& model, const ForwardTrace<T>& t,
                                     const Tensor<T>& grad_logits) {
  const ModelConfig& c = model.config;
  std::vector<LayerParams<T>> grads;
  grads.reserve(model.params.size());
  std::size_t first_trainable = model.params.size();
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    const auto& p = model.params[i];
    grads.push_back({p.name, Tensor<T>(p.weights.shape(), T(0)), Tensor<T>(p.bias.shape(), T(0))});
    if (first_trainable == model.params.size() && !model.is_frozen(p.name)) first_trainable = i;
  }
  if (first_trainable == model.params.size()) return grads;

  auto store = [&](std::size_t i, LayerGrads<T>& g) {
    grads[i].weights = std::move(g.grad_weights);
    grads[i].bias = std::move(g.grad_bias);
  };

  std::size_t layer = model.params.size() - 1;
  LayerGrads<T> g = dense_backward(t.logits_cache, grad_logits);
  store(layer, g);
  if (layer == first_trainable) return grads;
  Tensor<T> grad = std::move(g.grad_input);

  for (std::size_t j = c.head.size(); j-- > 0;) {
    --layer;
    grad = relu_backward(t.fc_out[j], dropout_backward(t.dropout_mask[j], grad));
    LayerGrads<T> d = dense_backward(t.fc[j], grad);
    store(layer, d);
    if (layer == first_trainable) return grads;
    grad = std::move(d.grad_input);
  }

  grad = gap_backward(t.feature_shape, grad);
  if (c.attention) {
    layer -= 2;
    const AttentionParams<T> ap{model.params[layer], model.params[layer + 1]};
    AttentionGrads<T> a = ca_backward(t.attention, ap, grad);
    grads[layer].weights = std::move(a.params.reduce.weights);
    grads[layer].bias = std::move(a.params.reduce.bias);
    grads[layer + 1].weights = std::move(a.params.expand.weights);
    grads[layer + 1].bias = std::move(a.params.expand.bias);
    if (first_trainable >= layer) return grads;
    grad = std::move(a.grad_input);
  }

  for (std::size_t i = c.backbone.size(); i-- > 0;) {
    --layer;
    if (c.backbone[i].pool) grad = maxpool2d_backward(t.pool[i], grad);
    grad = relu_backward(t.conv_out[i], grad);
    LayerGrads<T> cg = conv2d_backward(t.conv[i], grad);
    store(layer, cg);
    if (layer == first_trainable) return grads;
    grad = std::move(cg.grad_input);
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Transfer

TransferPolicy parse_policy(std::string_view text) {
  if (text == "freeze" || text == "freeze_backbone") return TransferPolicy::kFreezeBackbone;
  if (text == "all" || text == "finetune_all") return TransferPolicy::kFinetuneAll;
  throw ConfigError("unknown transfer policy \"" + std::string(text) + "\" (expected freeze or all)");
}

Model transfer(const Model& source, const ModelConfig& target, TransferPolicy policy, std::uint64_t seed) {
  try {
    target.validate();
  } catch (const ConfigError& e) {
    throw TransferError(std::string("transfer: target config invalid: ") + e.what());
  }
  Model model = build_model<float>(target, seed);
  for (auto& p : model.params) {
    if (!starts_with(p.name, "backbone.") && !starts_with(p.name, "attention.")) continue;
    const auto it = std::find_if(source.params.begin(), source.params.end(),
                                 [&](const auto& s) { return s.name == p.name; });
    if (it == source.params.end()) {
      throw TransferError("transfer: layer " + p.name + " is missing from the source model");
    }
    if (it->weights.shape() != p.weights.shape() || it->bias.shape() != p.bias.shape()) {
      throw TransferError("transfer: layer " + p.name + " has shape " + shape_string(p.weights.shape()) +
                          " but the source has " + shape_string(it->weights.shape()));
    }
    p.weights = it->weights;
    p.bias = it->bias;
    if (policy == TransferPolicy::kFreezeBackbone && starts_with(p.name, "backbone.")) model.frozen.insert(p.name);
  }
  return model;
}

Model transfer(const Model& source, const HeadSpec& head, TransferPolicy policy, std::uint64_t seed) {
  ModelConfig target = source.config;
  target.head = head.hidden;
  target.num_classes = head.num_classes;
  target.dropout_rate = head.dropout_rate;
  return transfer(source, target, policy, seed);
}

// ---------------------------------------------------------------------------
// Checkpoint encoding

namespace {

constexpr char kMagic[4] = {'A', 'E', 'N', 'S'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_tensor(std::string& out, const TensorF& t) {
  put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
  for (float f : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(f));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw CorruptCheckpointError("checkpoint is truncated");
    std::string_view out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint32_t u32() {
    const std::string_view b = take(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[i]);
    return v;
  }
  TensorF tensor(const Shape& expected, const std::string& layer) {
    const std::uint32_t rank = u32();
    if (rank != expected.size()) throw CorruptCheckpointError("checkpoint layer " + layer + " has wrong rank");
    Shape shape(rank);
    for (auto& d : shape) d = u32();
    if (shape != expected) {
      throw CorruptCheckpointError("checkpoint layer " + layer + " has shape " + shape_string(shape) +
                                   ", config implies " + shape_string(expected));
    }
    std::vector<float> data(checked_volume(shape));
    for (auto& f : data) f = std::bit_cast<float>(u32());
    return TensorF(shape, std::move(data));
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Model& model, const TrainingSummary& summary) {
  nlohmann::json meta = {{"config", model.config},
                         {"frozen", model.frozen},
                         {"history",
                          {{"epochs", summary.epochs},
                           {"final_train_loss", summary.final_train_loss},
                           {"final_train_accuracy", summary.final_train_accuracy},
                           {"final_test_accuracy", summary.final_test_accuracy}}}};
  const std::string block = meta.dump();
  std::string out(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(block.size()));
  out += block;
  put_u32(out, static_cast<std::uint32_t>(model.params.size()));
  for (const auto& p : model.params) {
    put_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out += p.name;
    put_tensor(out, p.weights);
    put_tensor(out, p.bias);
  }
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  Reader in(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw CorruptCheckpointError("not a checkpoint: bad magic");
  }
  in.take(4);
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion) {
    throw UnsupportedVersionError("unsupported checkpoint version " + std::to_string(version) +
                                  " (this build reads version " + std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint32_t block_len = in.u32();
  const std::string_view block = in.take(block_len);
  Checkpoint ckpt;
  try {
    const nlohmann::json meta = nlohmann::json::parse(block);
    ckpt.model.config = meta.at("config").get<ModelConfig>();
    ckpt.model.config.validate();
    ckpt.model.frozen = meta.at("frozen").get<std::set<std::string>>();
    const auto& h = meta.at("history");
    ckpt.summary.epochs = h.at("epochs").get<std::size_t>();
    ckpt.summary.final_train_loss = h.at("final_train_loss").get<double>();
    ckpt.summary.final_train_accuracy = h.at("final_train_accuracy").get<double>();
    ckpt.summary.final_test_accuracy = h.at("final_test_accuracy").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw CorruptCheckpointError(std::string("checkpoint metadata is malformed: ") + e.what());
  } catch (const ConfigError& e) {
    throw CorruptCheckpointError(std::string("checkpoint config is invalid: ") + e.what());
  }
  const auto layers = layout(ckpt.model.config);
  const std::uint32_t count = in.u32();
  if (count != layers.size()) {
    throw CorruptCheckpointError("checkpoint has " + std::to_string(count) + " layers, config implies " +
                                 std::to_string(layers.size()));
  }
  for (const auto& l : layers) {
    const std::uint32_t name_len = in.u32();
    const std::string name(in.take(name_len));
    if (name != l.name) throw CorruptCheckpointError("checkpoint layer " + name + " found where " + l.name + " expected");
    TensorF weights = in.tensor(l.weights, name);
    TensorF bias = in.tensor(l.bias, name);
    ckpt.model.params.push_back({name, std::move(weights), std::move(bias)});
  }
  if (!in.done()) throw CorruptCheckpointError("checkpoint has trailing bytes");
  for (const auto& f : ckpt.model.frozen) {
    if (std::none_of(layers.begin(), layers.end(), [&](const LayerLayout& l) { return l.name == f; })) {
      throw CorruptCheckpointError("checkpoint freezes unknown layer " + f);
    }
  }
  return ckpt;
}

void save(const Model& model, const std::string& path, const TrainingSummary& summary) {
  const std::string bytes = encode_checkpoint(model, summary);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

Model load(const std::string& path) { return load_checkpoint(path).model; }

#define AENS_INSTANTIATE(T)                                                                       \
  template struct BasicModel<T>;                                                                  \
  template BasicModel<T> build_model<T>(const ModelConfig&, std::uint64_t);                       \
  template Tensor<T> forward(const BasicModel<T>&, const Tensor<T>&, const ForwardMode&,          \
                             ForwardTrace<T>*);                                                   \
  template std::vector<LayerParams<T>> backward(const BasicModel<T>&, const ForwardTrace<T>&,     \
                                                const Tensor<T>&);

AENS_INSTANTIATE(float)
AENS_INSTANTIATE(double)

#undef AENS_INSTANTIATE

}  // namespace aens
