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
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "aens/data.h"
#include "aens/grad_check.h"
#include "aens/trainer.h"
#include "test_util.h"

namespace aens {
namespace {

using testing::random_tensor;

ModelConfig small_config(std::size_t classes = 4) {
  ModelConfig c;
  c.input_height = 16;
  c.input_width = 16;
  c.backbone = {{8, 3, true}, {8, 3, true}};
  c.head = {12};
  c.num_classes = classes;
  return c;
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TEST(ModelConfigTest, DefaultsAndLayerNames) {
  const ModelConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.feature_channels(), 64u);
  EXPECT_EQ(c.dropout_rate, 0.4);
  EXPECT_EQ(layer_names(c), (std::vector<std::string>{"backbone.conv0", "backbone.conv1", "backbone.conv2",
                                                      "attention.reduce", "attention.expand", "head.fc0",
                                                      "head.logits"}));
  EXPECT_EQ(ModelConfig::full_scale().input_height, 512u);
}

TEST(ModelConfigTest, Validation) {
  ModelConfig c = small_config();
  c.input_height = c.input_width = 32;
  c.backbone.assign(6, {4, 3, true});
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.dropout_rate = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.num_classes = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.attention_reduction = 16;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ModelConfigTest, JsonRoundTripAndUnknownKeys) {
  const ModelConfig c = small_config();
  const nlohmann::json j = c;
  EXPECT_EQ(j.get<ModelConfig>(), c);
  nlohmann::json bad = j;
  bad["colour"] = 1;
  EXPECT_THROW(bad.get<ModelConfig>(), ConfigError);
}

TEST(BuildModelTest, DeterministicAndShaped) {
  const ModelConfig c = ModelConfig::desk_scale(40);
  const Model a = build_model(c, 9);
  const Model b = build_model(c, 9);
  EXPECT_EQ(a.params, b.params);
  EXPECT_NE(a.params, build_model(c, 10).params);
  EXPECT_EQ(a.layer("head.logits").weights.shape(), (Shape{128, 40}));
  EXPECT_EQ(a.layer("backbone.conv0").weights.shape(), (Shape{16, 3, 3, 3}));
  EXPECT_EQ(a.layer("attention.reduce").weights.shape(), (Shape{16, 64, 1, 1}));
  for (const auto& p : a.params)
    for (float v : p.bias.data()) EXPECT_EQ(v, 0.0f);
}

TEST(BuildModelTest, HeUniformBounds) {
  const Model m = build_model(ModelConfig::desk_scale(40), 1);
  const auto& w = m.layer("backbone.conv1").weights;  // fan_in 16 * 9
  const float limit = std::sqrt(6.0f / 144.0f);
  float hi = 0;
  for (float v : w.data()) hi = std::max(hi, std::abs(v));
  EXPECT_LE(hi, limit);
  EXPECT_GT(hi, 0.9f * limit);
}

// Regression bounds measured on fresh desk-scale models, seeds 0..19: synthetic
// images stay within [0.42/K, 2.32/K] (K = 6) and uniform noise within
// [0.09/K, 4.2/K].
TEST(ForwardTest, FreshModelIsNearUniform) {
  SynthSpec spec;
  spec.per_class = 2;
  const Dataset ds = synth_dataset(spec);
  std::mt19937_64 gen(2);
  constexpr float k = 6;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Model m = build_model(ModelConfig::desk_scale(6), seed);
    for (const auto& s : ds.samples) {
      const TensorF p = forward(m, s.image.reshape({1, 3, 48, 48}), ForwardMode::eval());
      for (float v : p.data()) {
        EXPECT_GE(v, 1 / (4 * k));
        EXPECT_LE(v, 4 / k);
      }
    }
    const TensorF noise = random_tensor<float>(gen, {4, 3, 48, 48}, 0.0, 1.0);
    const TensorF p = forward(m, noise, ForwardMode::eval());
    for (float v : p.data()) {
      EXPECT_GE(v, 1 / (16 * k));
      EXPECT_LE(v, 6 / k);
    }
  }
}

TEST(ForwardTest, DeterministicRowStochasticAndBatchDecomposable) {
  std::mt19937_64 gen(3);
  const Model m = build_model(small_config(), 4);
  const TensorF x = random_tensor<float>(gen, {5, 3, 16, 16}, 0.0, 1.0);
  const TensorF p = forward(m, x, ForwardMode::eval());
  EXPECT_EQ(p, forward(m, x, ForwardMode::eval()));
  for (std::size_t n = 0; n < 5; ++n) {
    double sum = 0;
    for (std::size_t k = 0; k < 4; ++k) sum += p.at({n, k});
    EXPECT_NEAR(sum, 1.0, 1e-6);
    const std::size_t per = 3 * 16 * 16;
    const TensorF one({1, 3, 16, 16}, std::vector<float>(x.raw() + n * per, x.raw() + (n + 1) * per));
    const TensorF q = forward(m, one, ForwardMode::eval());
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(q[k], p.at({n, k}), 1e-6);
  }
  EXPECT_THROW(forward(m, TensorF({1, 3, 16, 8}, 0.0f), ForwardMode::eval()), ShapeError);
  EXPECT_THROW(forward(m, TensorF({1, 1, 16, 16}, 0.0f), ForwardMode::eval()), ShapeError);
}

TEST(ForwardTest, SaturatedAttentionMatchesAttentionFreeModel) {
  std::mt19937_64 gen(5);
  Model m = build_model(small_config(), 6);
  testing::saturate_attention(m);
  const Model plain = testing::without_attention(m);
  const TensorF x = random_tensor<float>(gen, {3, 3, 16, 16}, 0.0, 1.0);
  EXPECT_LE(max_abs_diff(forward(m, x, ForwardMode::eval()), forward(plain, x, ForwardMode::eval())), 1e-5);
}

TEST(BackwardTest, MatchesFiniteDifferencesInDouble) {
  std::mt19937_64 gen(7);
  ModelConfig c = small_config(3);
  c.input_height = c.input_width = 8;
  c.backbone = {{4, 3, true}, {4, 3, false}};
  c.attention_reduction = 2;
  BasicModel<double> m = build_model<double>(c, 8);
  const TensorD x = random_tensor(gen, {2, 3, 8, 8});
  const TensorD y = one_hot<double>({0, 2}, 3);
  const ForwardMode mode = ForwardMode::train(77);
  ForwardTrace<double> trace;
  const TensorD probs = forward(m, x, mode, &trace);
  const auto grads = backward(m, trace, softmax_cross_entropy_grad(probs, y));
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    const auto f = [&](const TensorD& w) {
      BasicModel<double> mm = m;
      mm.params[i].weights = w;
      return cross_entropy(y, forward(mm, x, mode));
    };
    EXPECT_LT(grad_check(f, grads[i].weights, m.params[i].weights), 1e-4) << m.params[i].name;
  }
}

TEST(TransferTest, FreezeAndSurgery) {
  const Model source = build_model(small_config(6), 1);
  ModelConfig target = small_config(5);
  const Model frozen = transfer(source, target, TransferPolicy::kFreezeBackbone, 2);
  EXPECT_EQ(frozen.layer("head.logits").weights.shape(), (Shape{12, 5}));
  EXPECT_EQ(frozen.frozen, (std::set<std::string>{"backbone.conv0", "backbone.conv1"}));
  EXPECT_EQ(frozen.layer("backbone.conv1"), source.layer("backbone.conv1"));
  EXPECT_EQ(frozen.layer("attention.expand"), source.layer("attention.expand"));
  EXPECT_TRUE(transfer(source, target, TransferPolicy::kFinetuneAll, 2).frozen.empty());

  const Model via_head = transfer(source, HeadSpec{{7}, 3, 0.25}, TransferPolicy::kFinetuneAll, 2);
  EXPECT_EQ(via_head.layer("head.logits").weights.shape(), (Shape{7, 3}));
  EXPECT_EQ(via_head.config.dropout_rate, 0.25);
  EXPECT_EQ(parse_policy("freeze"), TransferPolicy::kFreezeBackbone);
  EXPECT_EQ(parse_policy("all"), TransferPolicy::kFinetuneAll);
  EXPECT_THROW(parse_policy("some"), ConfigError);
}

TEST(TransferTest, IncompatibleShapesNameTheLayer) {
  const Model source = build_model(small_config(6), 1);
  ModelConfig target = small_config(5);
  target.input_channels = 1;
  try {
    transfer(source, target, TransferPolicy::kFinetuneAll, 2);
    FAIL() << "expected TransferError";
  } catch (const TransferError& e) {
    EXPECT_NE(std::string(e.what()).find("backbone.conv0"), std::string::npos) << e.what();
  }
  target = small_config(5);
  target.backbone[1].out_channels = 16;
  EXPECT_THROW(transfer(source, target, TransferPolicy::kFinetuneAll, 2), TransferError);
  target = small_config(5);
  target.input_height = target.input_width = 2;
  EXPECT_THROW(transfer(source, target, TransferPolicy::kFinetuneAll, 2), TransferError);
}

TEST(CheckpointTest, SaveLoadSaveIsByteIdentical) {
  testing::TempDir dir("ckpt");
  Model m = transfer(build_model(small_config(6), 1), small_config(5), TransferPolicy::kFreezeBackbone, 3);
  const TrainingSummary summary{4, 0.5, 0.75, 0.625};
  save(m, dir.str("a.aens"), summary);
  const Checkpoint loaded = load_checkpoint(dir.str("a.aens"));
  EXPECT_EQ(loaded.model.params, m.params);
  EXPECT_EQ(loaded.model.frozen, m.frozen);
  EXPECT_EQ(loaded.model.config, m.config);
  EXPECT_EQ(loaded.summary, summary);
  save(loaded.model, dir.str("b.aens"), loaded.summary);
  EXPECT_EQ(read_bytes(dir.str("a.aens")), read_bytes(dir.str("b.aens")));
}

TEST(CheckpointTest, CorruptionIsReported) {
  const std::string bytes = encode_checkpoint(build_model(small_config(), 1));
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), CorruptCheckpointError);
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, 6)), CorruptCheckpointError);
  EXPECT_THROW(decode_checkpoint(bytes + "x"), CorruptCheckpointError);
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad_magic), CorruptCheckpointError);
  std::string next_version = bytes;
  next_version[4] = static_cast<char>(kCheckpointVersion + 1);
  EXPECT_THROW(decode_checkpoint(next_version), UnsupportedVersionError);
  EXPECT_THROW(load("/nonexistent/model.aens"), IoError);
}

}  // namespace
}  // namespace aens
