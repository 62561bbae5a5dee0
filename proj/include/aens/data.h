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

#ifndef AENS_DATA_H_
#define AENS_DATA_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aens/tensor.h"
#include "json.hpp"

namespace aens {

// Pixel rectangle [x_min, x_max) x [y_min, y_max).
struct BBox {
  std::size_t x_min = 0, y_min = 0, x_max = 0, y_max = 0;
  std::size_t width() const { return x_max - x_min; }
  std::size_t height() const { return y_max - y_min; }
  bool operator==(const BBox&) const = default;
};

enum class Split { kTrain, kTest };

Split parse_split(std::string_view text);
std::string_view split_name(Split split);

struct Sample {
  std::string id;
  TensorF image;  // [C, H, W], values in [0, 1]
  std::size_t label = 0;
  std::optional<BBox> bbox;
  Split split = Split::kTrain;
};

struct Dataset {
  std::vector<Sample> samples;
  std::vector<std::string> class_names;  // index = label

  std::size_t num_classes() const { return class_names.size(); }
  std::size_t size() const { return samples.size(); }
  // Samples of one split, in manifest order, sharing class_names.
  Dataset filter(Split split) const;
  std::vector<std::size_t> labels() const;
  std::vector<std::string> ids() const;
};

// ---------------------------------------------------------------------------
// Binary PPM (P6). Decoding normalizes by maxval; encoding writes maxval 255.

TensorF decode_ppm(std::string_view bytes, const std::string& name);
std::string encode_ppm(const TensorF& image);
TensorF read_ppm(const std::string& path);
void write_ppm(const std::string& path, const TensorF& image);

// ---------------------------------------------------------------------------
// Manifest: <root>/labels.csv with columns id, class_name, split and optional
// x_min, y_min, x_max, y_max; images at <root>/<id>.ppm. Class indices follow
// the sorted class names of the whole manifest.

inline constexpr std::string_view kManifestName = "labels.csv";

struct ManifestRow {
  std::string id;
  std::string class_name;
  Split split = Split::kTrain;
  std::optional<BBox> bbox;
  std::size_t line = 0;
};

std::vector<ManifestRow> read_manifest(const std::string& path);
std::vector<std::string> class_names_of(const std::vector<ManifestRow>& rows);

Dataset load_dataset(const std::string& root_dir);
Dataset load_dataset(const std::string& root_dir, Split split);
void write_dataset(const Dataset& dataset, const std::string& root_dir);

// ---------------------------------------------------------------------------
// Geometry.

// The result carries a bbox covering the whole crop. Throws MissingBboxError
// when the sample has no bbox.
Sample crop_bbox(const Sample& sample);

// Bilinear resampling with half-pixel centers.
TensorF resize_bilinear(const TensorF& image, std::size_t out_h, std::size_t out_w);

// ---------------------------------------------------------------------------
// Augmentation: rotation about the center, horizontal flip, width shift and
// height shift, applied in that order as one bilinear resampling with zero
// fill outside the source.

struct AugmentConfig {
  double rotation_deg = 23.0;
  bool h_flip = true;
  double width_shift_frac = 0.20;
  double height_shift_frac = 0.20;

  static AugmentConfig none() { return {0.0, false, 0.0, 0.0}; }
  void validate() const;
  bool operator==(const AugmentConfig&) const = default;
};

void to_json(nlohmann::json& j, const AugmentConfig& cfg);
void from_json(const nlohmann::json& j, AugmentConfig& cfg);

// One concrete draw of the augmentation parameters.
struct AugmentParams {
  double rotation_deg = 0.0;
  bool flip = false;
  double shift_x = 0.0;  // pixels
  double shift_y = 0.0;
};

AugmentParams sample_augment(const AugmentConfig& cfg, std::uint64_t seed, std::size_t width,
                             std::size_t height);
TensorF apply_augment(const TensorF& image, const AugmentParams& params);
TensorF augment(const TensorF& image, const AugmentConfig& cfg, std::uint64_t seed);

// Per-sample augmentation seed, independent of processing order.
std::uint64_t sample_seed(std::uint64_t base_seed, std::uint64_t epoch, std::string_view sample_id);

// Permutation of [0, n) that depends only on (seed, n).
std::vector<std::size_t> shuffle_order(std::uint64_t seed, std::size_t n);

// ---------------------------------------------------------------------------
// Synthetic data: each class is a (shape, count, arrangement) triple drawn
// from a fixed catalog; classes [class_offset, class_offset + num_classes)
// are generated. Position, size, color and background vary per sample, and
// the bbox encloses the class-defining objects.

struct SynthSpec {
  std::size_t num_classes = 6;
  std::size_t per_class = 50;
  std::size_t image_size = 48;
  std::uint64_t seed = 0;
  std::size_t class_offset = 0;
  double test_fraction = 0.25;  // per class, the trailing share goes to test

  void validate() const;
};

void to_json(nlohmann::json& j, const SynthSpec& spec);
void from_json(const nlohmann::json& j, SynthSpec& spec);

std::size_t synth_catalog_size();
std::string synth_class_name(std::size_t catalog_index);

Dataset synth_dataset(const SynthSpec& spec);

}  // namespace aens

#endif  // AENS_DATA_H_
