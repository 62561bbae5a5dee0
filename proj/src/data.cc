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

#include "aens/data.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "aens/random.h"
#include "json_util.h"

namespace aens {
namespace {

std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError(std::string("cannot open ") + what + " " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path);
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::size_t parse_index(const std::string& text, const std::string& where) {
  if (text.empty() || !std::all_of(text.begin(), text.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    throw ManifestError(where + ": expected a nonnegative integer, got \"" + text + "\"");
  }
  return std::stoul(text);
}

bool valid_id(const std::string& id) {
  return !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  }) && id != "." && id != "..";
}

float quantize(double v) {
  const double clamped = std::clamp(v, 0.0, 1.0);
  return static_cast<float>(std::lround(clamped * 255.0)) / 255.0f;
}

}  // namespace

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "test") return Split::kTest;
  throw ConfigError("unknown split \"" + std::string(text) + "\" (expected train or test)");
}

std::string_view split_name(Split split) { return split == Split::kTrain ? "train" : "test"; }

Dataset Dataset::filter(Split split) const {
  Dataset out{{}, class_names};
  for (const auto& s : samples)
    if (s.split == split) out.samples.push_back(s);
  return out;
}

std::vector<std::size_t> Dataset::labels() const {
  std::vector<std::size_t> out;
  for (const auto& s : samples) out.push_back(s.label);
  return out;
}

std::vector<std::string> Dataset::ids() const {
  std::vector<std::string> out;
  for (const auto& s : samples) out.push_back(s.id);
  return out;
}

// ---------------------------------------------------------------------------
// PPM

TensorF decode_ppm(std::string_view bytes, const std::string& name) {
  std::size_t pos = 0;
  auto fail = [&](const std::string& why) -> void { throw IngestError(name + ": malformed PPM header: " + why); };
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto number = [&](const char* field) {
    skip_space();
    const std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (pos == start || pos - start > 9) fail(std::string("bad ") + field);
    return std::stoul(std::string(bytes.substr(start, pos - start)));
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') fail("expected P6 magic");
  pos = 2;
  const std::size_t width = number("width");
  const std::size_t height = number("height");
  const std::size_t maxval = number("maxval");
  if (width == 0 || height == 0) fail("zero image dimension");
  if (maxval == 0 || maxval > 255) fail("maxval must be in 1..255");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) fail("missing separator before pixel data");
  ++pos;
  const std::size_t plane = width * height;
  if (bytes.size() - pos < 3 * plane) throw IngestError(name + ": truncated PPM pixel data");
  TensorF image({3, height, width}, 0.0f);
  const auto* px = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
  const auto max = static_cast<float>(maxval);
  for (std::size_t i = 0; i < plane; ++i)
    for (std::size_t c = 0; c < 3; ++c) image[c * plane + i] = std::min(1.0f, static_cast<float>(px[3 * i + c]) / max);
  return image;
}

std::string encode_ppm(const TensorF& image) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw ShapeError("PPM encoding needs a [3, H, W] image, got " + shape_string(image.shape()));
  }
  const std::size_t h = image.dim(1), w = image.dim(2), plane = h * w;
  std::string out = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  out.reserve(out.size() + 3 * plane);
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      const double v = std::clamp(static_cast<double>(image[c * plane + i]), 0.0, 1.0);
      out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
  }
  return out;
}

TensorF read_ppm(const std::string& path) { return decode_ppm(read_file(path, "image"), path); }

void write_ppm(const std::string& path, const TensorF& image) { write_file(path, encode_ppm(image)); }

// ---------------------------------------------------------------------------
// Manifest

std::vector<ManifestRow> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open manifest " + path);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) header = split_csv(line);
  }
  const std::vector<std::string> base = {"id", "class_name", "split"};
  const std::vector<std::string> with_box = {"id", "class_name", "split", "x_min", "y_min", "x_max", "y_max"};
  if (header != base && header != with_box) {
    throw ManifestError(path + ": header must be id,class_name,split[,x_min,y_min,x_max,y_max]");
  }
  std::vector<ManifestRow> rows;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    const auto f = split_csv(line);
    if (f.size() != header.size()) {
      throw ManifestError(where + ": expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
    }
    ManifestRow row;
    row.line = line_no;
    row.id = f[0];
    row.class_name = f[1];
    if (!valid_id(row.id)) throw ManifestError(where + ": invalid sample id \"" + row.id + "\"");
    if (row.class_name.empty()) throw ManifestError(where + ": empty class_name");
    try {
      row.split = parse_split(f[2]);
    } catch (const ConfigError& e) {
      throw ManifestError(where + ": " + e.what());
    }
    if (f.size() == 7) {
      const bool any = !f[3].empty() || !f[4].empty() || !f[5].empty() || !f[6].empty();
      const bool all = !f[3].empty() && !f[4].empty() && !f[5].empty() && !f[6].empty();
      if (any && !all) throw ManifestError(where + ": bbox columns must be all present or all empty");
      if (all) {
        row.bbox = BBox{parse_index(f[3], where), parse_index(f[4], where), parse_index(f[5], where),
                        parse_index(f[6], where)};
      }
    }
    if (!seen.insert(row.id).second) throw ManifestError(where + ": duplicate id \"" + row.id + "\"");
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::string> class_names_of(const std::vector<ManifestRow>& rows) {
  std::set<std::string> names;
  for (const auto& r : rows) names.insert(r.class_name);
  return {names.begin(), names.end()};
}

namespace {

Dataset load_rows(const std::string& root_dir, const std::optional<Split>& only) {
  namespace fs = std::filesystem;
  const std::string manifest = (fs::path(root_dir) / kManifestName).string();
  const auto rows = read_manifest(manifest);
  Dataset ds;
  ds.class_names = class_names_of(rows);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ds.class_names.size(); ++i) index[ds.class_names[i]] = i;
  for (const auto& r : rows) {
    if (only && r.split != *only) continue;
    const std::string file = (fs::path(root_dir) / (r.id + ".ppm")).string();
    if (!fs::exists(file)) throw IngestError(file + ": missing image for manifest row " + std::to_string(r.line));
    Sample s;
    s.id = r.id;
    s.image = read_ppm(file);
    s.label = index.at(r.class_name);
    s.split = r.split;
    if (r.bbox) {
      const BBox& b = *r.bbox;
      const std::size_t w = s.image.dim(2), h = s.image.dim(1);
      if (!(b.x_min < b.x_max && b.x_max <= w && b.y_min < b.y_max && b.y_max <= h)) {
        throw IngestError(manifest + ":" + std::to_string(r.line) + ": bbox (" + std::to_string(b.x_min) + "," +
                          std::to_string(b.y_min) + "," + std::to_string(b.x_max) + "," + std::to_string(b.y_max) +
                          ") out of range for " + file + " (" + std::to_string(w) + "x" + std::to_string(h) + ")");
      }
      s.bbox = b;
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace

Dataset load_dataset(const std::string& root_dir) { return load_rows(root_dir, std::nullopt); }

Dataset load_dataset(const std::string& root_dir, Split split) { return load_rows(root_dir, split); }

void write_dataset(const Dataset& dataset, const std::string& root_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(root_dir, ec);
  if (ec) throw IoError("cannot create directory " + root_dir + ": " + ec.message());
  std::ostringstream csv;
  csv << "id,class_name,split,x_min,y_min,x_max,y_max\n";
  for (const auto& s : dataset.samples) {
    csv << s.id << ',' << dataset.class_names.at(s.label) << ',' << split_name(s.split) << ',';
    if (s.bbox) {
      csv << s.bbox->x_min << ',' << s.bbox->y_min << ',' << s.bbox->x_max << ',' << s.bbox->y_max << '\n';
    } else {
      csv << ",,,\n";
    }
    write_ppm((fs::path(root_dir) / (s.id + ".ppm")).string(), s.image);
  }
  write_file((fs::path(root_dir) / kManifestName).string(), csv.str());
}

// ---------------------------------------------------------------------------
// Geometry

Sample crop_bbox(const Sample& sample) {
  if (!sample.bbox) throw MissingBboxError("sample " + sample.id + " has no bounding box to crop");
  const BBox& b = *sample.bbox;
  const std::size_t channels = sample.image.dim(0), h = sample.image.dim(1), w = sample.image.dim(2);
  if (!(b.x_min < b.x_max && b.x_max <= w && b.y_min < b.y_max && b.y_max <= h)) {
    throw ShapeError("sample " + sample.id + " has a bbox outside its image");
  }
  TensorF crop({channels, b.height(), b.width()}, 0.0f);
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t y = 0; y < b.height(); ++y)
      for (std::size_t x = 0; x < b.width(); ++x)
        crop[(c * b.height() + y) * b.width() + x] = sample.image[(c * h + b.y_min + y) * w + b.x_min + x];
  Sample out = sample;
  out.image = std::move(crop);
  out.bbox = BBox{0, 0, b.width(), b.height()};
  return out;
}

TensorF resize_bilinear(const TensorF& image, std::size_t out_h, std::size_t out_w) {
  if (image.rank() != 3) throw ShapeError("resize expects a [C, H, W] image, got " + shape_string(image.shape()));
  if (out_h == 0 || out_w == 0) throw ShapeError("resize target dimensions must be at least 1");
  const std::size_t channels = image.dim(0), h = image.dim(1), w = image.dim(2);
  TensorF out({channels, out_h, out_w}, 0.0f);
  const double sy_scale = static_cast<double>(h) / static_cast<double>(out_h);
  const double sx_scale = static_cast<double>(w) / static_cast<double>(out_w);
  for (std::size_t y = 0; y < out_h; ++y) {
    const double sy = std::clamp((static_cast<double>(y) + 0.5) * sy_scale - 0.5, 0.0, static_cast<double>(h - 1));
    const std::size_t y0 = static_cast<std::size_t>(sy);
    const std::size_t y1 = std::min(y0 + 1, h - 1);
    const double fy = sy - static_cast<double>(y0);
    for (std::size_t x = 0; x < out_w; ++x) {
      const double sx = std::clamp((static_cast<double>(x) + 0.5) * sx_scale - 0.5, 0.0, static_cast<double>(w - 1));
      const std::size_t x0 = static_cast<std::size_t>(sx);
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const double fx = sx - static_cast<double>(x0);
      for (std::size_t c = 0; c < channels; ++c) {
        const float* p = image.raw() + c * h * w;
        const double top = p[y0 * w + x0] * (1.0 - fx) + p[y0 * w + x1] * fx;
        const double bottom = p[y1 * w + x0] * (1.0 - fx) + p[y1 * w + x1] * fx;
        out[(c * out_h + y) * out_w + x] = static_cast<float>(top * (1.0 - fy) + bottom * fy);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Augmentation

void AugmentConfig::validate() const {
  if (!(rotation_deg >= 0.0) || !std::isfinite(rotation_deg)) throw ConfigError("augment.rotation_deg must be >= 0");
  if (!(width_shift_frac >= 0.0 && width_shift_frac < 1.0)) throw ConfigError("augment.width_shift_frac must lie in [0, 1)");
  if (!(height_shift_frac >= 0.0 && height_shift_frac < 1.0)) throw ConfigError("augment.height_shift_frac must lie in [0, 1)");
}

void to_json(nlohmann::json& j, const AugmentConfig& cfg) {
  j = {{"rotation_deg", cfg.rotation_deg},
       {"h_flip", cfg.h_flip},
       {"width_shift_frac", cfg.width_shift_frac},
       {"height_shift_frac", cfg.height_shift_frac}};
}

void from_json(const nlohmann::json& j, AugmentConfig& cfg) {
  constexpr std::string_view ctx = "augment";
  json_util::require_keys(j, {"rotation_deg", "h_flip", "width_shift_frac", "height_shift_frac"}, ctx);
  json_util::read_optional(j, "rotation_deg", cfg.rotation_deg, ctx);
  json_util::read_optional(j, "h_flip", cfg.h_flip, ctx);
  json_util::read_optional(j, "width_shift_frac", cfg.width_shift_frac, ctx);
  json_util::read_optional(j, "height_shift_frac", cfg.height_shift_frac, ctx);
}

AugmentParams sample_augment(const AugmentConfig& cfg, std::uint64_t seed, std::size_t width, std::size_t height) {
  cfg.validate();
  Rng rng(seed);
  // Always consume four draws so each parameter comes from a fixed position in the stream.
  const double u_rot = rng.uniform(), u_flip = rng.uniform(), u_x = rng.uniform(), u_y = rng.uniform();
  AugmentParams p;
  p.rotation_deg = cfg.rotation_deg > 0.0 ? cfg.rotation_deg * (2.0 * u_rot - 1.0) : 0.0;
  p.flip = cfg.h_flip && u_flip < 0.5;
  p.shift_x = cfg.width_shift_frac > 0.0 ? cfg.width_shift_frac * (2.0 * u_x - 1.0) * static_cast<double>(width) : 0.0;
  p.shift_y = cfg.height_shift_frac > 0.0 ? cfg.height_shift_frac * (2.0 * u_y - 1.0) * static_cast<double>(height) : 0.0;
  return p;
}

TensorF apply_augment(const TensorF& image, const AugmentParams& params) {
  if (image.rank() != 3) throw ShapeError("augment expects a [C, H, W] image, got " + shape_string(image.shape()));
  const std::size_t channels = image.dim(0), h = image.dim(1), w = image.dim(2);
  const double theta = params.rotation_deg * std::numbers::pi / 180.0;
  const double cos_t = std::cos(theta), sin_t = std::sin(theta);
  const double cx = (static_cast<double>(w) - 1.0) / 2.0, cy = (static_cast<double>(h) - 1.0) / 2.0;
  TensorF out(image.shape(), 0.0f);
  auto pixel = [&](std::size_t c, std::ptrdiff_t y, std::ptrdiff_t x) -> double {
    if (x < 0 || y < 0 || x >= static_cast<std::ptrdiff_t>(w) || y >= static_cast<std::ptrdiff_t>(h)) return 0.0;
    return image[(c * h + static_cast<std::size_t>(y)) * w + static_cast<std::size_t>(x)];
  };
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      // Invert shift, then flip, then rotation.
      double px = static_cast<double>(x) - params.shift_x;
      double py = static_cast<double>(y) - params.shift_y;
      if (params.flip) px = static_cast<double>(w) - 1.0 - px;
      const double dx = px - cx, dy = py - cy;
      const double sx = cx + cos_t * dx + sin_t * dy;
      const double sy = cy - sin_t * dx + cos_t * dy;
      const double fx0 = std::floor(sx), fy0 = std::floor(sy);
      const double fx = sx - fx0, fy = sy - fy0;
      const auto x0 = static_cast<std::ptrdiff_t>(fx0), y0 = static_cast<std::ptrdiff_t>(fy0);
      for (std::size_t c = 0; c < channels; ++c) {
        double v = pixel(c, y0, x0) * (1.0 - fx) * (1.0 - fy);
        if (fx > 0.0) v += pixel(c, y0, x0 + 1) * fx * (1.0 - fy);
        if (fy > 0.0) v += pixel(c, y0 + 1, x0) * (1.0 - fx) * fy;
        if (fx > 0.0 && fy > 0.0) v += pixel(c, y0 + 1, x0 + 1) * fx * fy;
        out[(c * h + y) * w + x] = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return out;
}

TensorF augment(const TensorF& image, const AugmentConfig& cfg, std::uint64_t seed) {
  if (image.rank() != 3) throw ShapeError("augment expects a [C, H, W] image, got " + shape_string(image.shape()));
  return apply_augment(image, sample_augment(cfg, seed, image.dim(2), image.dim(1)));
}

std::uint64_t sample_seed(std::uint64_t base_seed, std::uint64_t epoch, std::string_view sample_id) {
  return mix_seed(base_seed, epoch, hash_string(sample_id));
}

std::vector<std::size_t> shuffle_order(std::uint64_t seed, std::size_t n) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

// ---------------------------------------------------------------------------
// Synthetic data

namespace {

enum class Primitive { kSquare, kDisk, kTriangle, kCross, kRing };
enum class Arrangement { kRow, kColumn };

struct SynthClass {
  Primitive shape;
  std::size_t count;
  Arrangement arrangement;
};

constexpr std::array<const char*, 5> kPrimitiveNames = {"square", "disk", "triangle", "cross", "ring"};

// The first eleven entries are ordered so that [0, 6) and [6, 11) form two
// disjoint tasks; the rest continue the full shape x count x arrangement grid.
const std::vector<SynthClass>& catalog() {
  static const std::vector<SynthClass> classes = [] {
    std::vector<SynthClass> c = {
        {Primitive::kSquare, 1, Arrangement::kRow},   {Primitive::kDisk, 1, Arrangement::kRow},
        {Primitive::kTriangle, 1, Arrangement::kRow}, {Primitive::kCross, 1, Arrangement::kRow},
        {Primitive::kSquare, 2, Arrangement::kRow},   {Primitive::kDisk, 2, Arrangement::kRow},
        {Primitive::kRing, 1, Arrangement::kRow},     {Primitive::kTriangle, 2, Arrangement::kRow},
        {Primitive::kCross, 2, Arrangement::kColumn}, {Primitive::kSquare, 3, Arrangement::kRow},
        {Primitive::kDisk, 2, Arrangement::kColumn},
    };
    for (std::size_t count = 1; count <= 3; ++count) {
      for (int shape = 0; shape < 5; ++shape) {
        for (auto arrangement : {Arrangement::kRow, Arrangement::kColumn}) {
          if (count == 1 && arrangement == Arrangement::kColumn) continue;
          const SynthClass k{static_cast<Primitive>(shape), count, arrangement};
          const bool present = std::any_of(c.begin(), c.end(), [&](const SynthClass& e) {
            return e.shape == k.shape && e.count == k.count && e.arrangement == k.arrangement;
          });
          if (!present) c.push_back(k);
        }
      }
    }
    return c;
  }();
  return classes;
}

bool inside(Primitive shape, double dx, double dy, double r) {
  switch (shape) {
    case Primitive::kSquare:
      return std::abs(dx) <= 0.8 * r && std::abs(dy) <= 0.8 * r;
    case Primitive::kDisk:
      return dx * dx + dy * dy <= r * r;
    case Primitive::kRing: {
      const double d2 = dx * dx + dy * dy;
      return d2 <= r * r && d2 >= 0.3 * r * r;
    }
    case Primitive::kTriangle:
      return dy >= -r && dy <= r && std::abs(dx) <= (dy + r) / 2.0;
    case Primitive::kCross:
      return (std::abs(dx) <= 0.3 * r && std::abs(dy) <= r) || (std::abs(dy) <= 0.3 * r && std::abs(dx) <= r);
  }
  return false;
}

Sample render(const SynthClass& k, std::size_t size, Rng& rng) {
  const double s = static_cast<double>(size);
  const double scale = s / 48.0;
  std::array<double, 3> bg, fg;
  for (auto& v : bg) v = rng.uniform(0.0, 0.35);
  // Foreground: bright in at least one channel, far enough from background.
  const std::size_t hot = rng.below(3);
  for (std::size_t c = 0; c < 3; ++c) fg[c] = c == hot ? rng.uniform(0.8, 1.0) : rng.uniform(0.2, 1.0);

  const double r = rng.uniform(5.0, 7.0) * scale;
  const double gap = rng.uniform(2.0, 5.0) * scale;
  const double step = 2.0 * r + gap;
  const double extent = step * static_cast<double>(k.count - 1);
  const double margin = r + 1.0;
  double along_lo = margin, along_hi = s - margin - extent;
  if (along_hi < along_lo) along_hi = along_lo;
  const double start = rng.uniform(along_lo, along_hi);
  const double across = rng.uniform(margin, s - margin);

  std::vector<std::pair<double, double>> centers;
  for (std::size_t i = 0; i < k.count; ++i) {
    const double a = start + step * static_cast<double>(i);
    const double jitter = rng.uniform(-1.5, 1.5) * scale;
    if (k.arrangement == Arrangement::kRow) {
      centers.emplace_back(a, across + jitter);
    } else {
      centers.emplace_back(across + jitter, a);
    }
  }

  TensorF image({3, size, size}, 0.0f);
  double x_lo = s, y_lo = s, x_hi = 0.0, y_hi = 0.0;
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      bool on = false;
      for (const auto& [cx, cy] : centers) on = on || inside(k.shape, static_cast<double>(x) - cx, static_cast<double>(y) - cy, r);
      if (on) {
        x_lo = std::min(x_lo, static_cast<double>(x));
        x_hi = std::max(x_hi, static_cast<double>(x));
        y_lo = std::min(y_lo, static_cast<double>(y));
        y_hi = std::max(y_hi, static_cast<double>(y));
      }
      for (std::size_t c = 0; c < 3; ++c) {
        const double noise = rng.uniform(-0.06, 0.06);
        image[(c * size + y) * size + x] = quantize((on ? fg[c] : bg[c]) + noise);
      }
    }
  }
  Sample out;
  out.image = std::move(image);
  if (x_hi >= x_lo) {
    const auto lo = [&](double v) { return static_cast<std::size_t>(std::max(0.0, v - 1.0)); };
    const auto hi = [&](double v) { return std::min(size, static_cast<std::size_t>(v + 2.0)); };
    out.bbox = BBox{lo(x_lo), lo(y_lo), hi(x_hi), hi(y_hi)};
  } else {
    out.bbox = BBox{0, 0, size, size};
  }
  return out;
}

}  // namespace

void SynthSpec::validate() const {
  if (num_classes < 2) throw ConfigError("synth.num_classes must be at least 2");
  if (class_offset + num_classes > synth_catalog_size()) {
    throw ConfigError("synth class range exceeds the catalog of " + std::to_string(synth_catalog_size()) + " classes");
  }
  if (per_class < 1) throw ConfigError("synth.per_class must be at least 1");
  if (image_size < 16) throw ConfigError("synth.image_size must be at least 16");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw ConfigError("synth.test_fraction must lie in [0, 1)");
}

void to_json(nlohmann::json& j, const SynthSpec& spec) {
  j = {{"num_classes", spec.num_classes}, {"per_class", spec.per_class},   {"image_size", spec.image_size},
       {"seed", spec.seed},               {"class_offset", spec.class_offset}, {"test_fraction", spec.test_fraction}};
}

void from_json(const nlohmann::json& j, SynthSpec& spec) {
  constexpr std::string_view ctx = "synth";
  json_util::require_keys(j, {"num_classes", "per_class", "image_size", "seed", "class_offset", "test_fraction"}, ctx);
  json_util::read_required(j, "num_classes", spec.num_classes, ctx);
  json_util::read_required(j, "per_class", spec.per_class, ctx);
  json_util::read_optional(j, "image_size", spec.image_size, ctx);
  json_util::read_optional(j, "seed", spec.seed, ctx);
  json_util::read_optional(j, "class_offset", spec.class_offset, ctx);
  json_util::read_optional(j, "test_fraction", spec.test_fraction, ctx);
}

std::size_t synth_catalog_size() { return catalog().size(); }

std::string synth_class_name(std::size_t catalog_index) {
  const SynthClass& k = catalog().at(catalog_index);
  std::ostringstream os;
  os << 'c' << (catalog_index < 10 ? "0" : "") << catalog_index << '_' << kPrimitiveNames[static_cast<int>(k.shape)]
     << "_x" << k.count;
  if (k.count > 1) os << (k.arrangement == Arrangement::kRow ? "_row" : "_col");
  return os.str();
}

Dataset synth_dataset(const SynthSpec& spec) {
  spec.validate();
  Dataset ds;
  for (std::size_t k = 0; k < spec.num_classes; ++k) ds.class_names.push_back(synth_class_name(spec.class_offset + k));
  const auto test_count = static_cast<std::size_t>(std::lround(spec.test_fraction * static_cast<double>(spec.per_class)));
  const std::size_t train_count = spec.per_class - std::min(test_count, spec.per_class);
  for (std::size_t k = 0; k < spec.num_classes; ++k) {
    const std::size_t global = spec.class_offset + k;
    for (std::size_t i = 0; i < spec.per_class; ++i) {
      Rng rng(mix_seed(spec.seed, global, i));
      Sample s = render(catalog()[global], spec.image_size, rng);
      std::ostringstream id;
      id << ds.class_names[k].substr(0, 3) << '_' << std::string(i < 10 ? "000" : i < 100 ? "00" : i < 1000 ? "0" : "") << i;
      s.id = id.str();
      s.label = k;
      s.split = i < train_count ? Split::kTrain : Split::kTest;
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}

}  // namespace aens
