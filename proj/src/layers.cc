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

#include "aens/layers.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "aens/parallel.h"
#include "aens/random.h"

namespace aens {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMatrix = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMapMatrix = Eigen::Map<const RowMatrix<T>>;

Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

// Unfolds one sample [C, H, W] into columns [C*kh*kw, out_h*out_w].
template <typename T>
void im2col(const T* image, const ConvGeometry& g, T* col) {
  const std::size_t positions = g.out_h * g.out_w;
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    const T* plane = image + c * g.in_h * g.in_w;
    for (std::size_t ki = 0; ki < g.kernel_h; ++ki) {
      for (std::size_t kj = 0; kj < g.kernel_w; ++kj) {
        T* row = col + ((c * g.kernel_h + ki) * g.kernel_w + kj) * positions;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ki) -
                                    static_cast<std::ptrdiff_t>(g.pad_top);
          T* out = row + oy * g.out_w;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) {
            std::fill(out, out + g.out_w, T(0));
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(iy) * g.in_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kj) -
                                      static_cast<std::ptrdiff_t>(g.pad_left);
            out[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) ? T(0) : src[ix];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters column gradients back onto [C, H, W].
template <typename T>
void col2im(const T* col, const ConvGeometry& g, T* image) {
  const std::size_t positions = g.out_h * g.out_w;
  std::fill(image, image + g.in_channels * g.in_h * g.in_w, T(0));
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    T* plane = image + c * g.in_h * g.in_w;
    for (std::size_t ki = 0; ki < g.kernel_h; ++ki) {
      for (std::size_t kj = 0; kj < g.kernel_w; ++kj) {
        const T* row = col + ((c * g.kernel_h + ki) * g.kernel_w + kj) * positions;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ki) -
                                    static_cast<std::ptrdiff_t>(g.pad_top);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
          T* dst = plane + static_cast<std::size_t>(iy) * g.in_w;
          const T* in = row + oy * g.out_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kj) -
                                      static_cast<std::ptrdiff_t>(g.pad_left);
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(g.in_w)) dst[ix] += in[ox];
          }
        }
      }
    }
  }
}

void require_rank(const Shape& shape, std::size_t rank, const char* what) {
  if (shape.size() != rank) {
    throw ShapeError(std::string(what) + " expects a rank-" + std::to_string(rank) +
                     " tensor, got " + shape_string(shape));
  }
}

}  // namespace

ConvGeometry conv_geometry(const Shape& input, const Shape& weights, std::size_t stride,
                           Padding padding) {
  require_rank(input, 4, "conv2d input");
  require_rank(weights, 4, "conv2d weights");
  if (stride == 0) throw ConfigError("conv2d stride must be at least 1");
  if (input[1] != weights[1]) {
    throw ShapeError("conv2d channel mismatch: input has " + std::to_string(input[1]) +
                     " channels, kernel expects " + std::to_string(weights[1]));
  }
  ConvGeometry g;
  g.batch = input[0];
  g.in_channels = input[1];
  g.in_h = input[2];
  g.in_w = input[3];
  g.out_channels = weights[0];
  g.kernel_h = weights[2];
  g.kernel_w = weights[3];
  g.stride = stride;
  if (padding == Padding::kSame) {
    g.out_h = (g.in_h + stride - 1) / stride;
    g.out_w = (g.in_w + stride - 1) / stride;
    const std::size_t need_h = (g.out_h - 1) * stride + g.kernel_h;
    const std::size_t need_w = (g.out_w - 1) * stride + g.kernel_w;
    g.pad_top = need_h > g.in_h ? (need_h - g.in_h) / 2 : 0;
    g.pad_left = need_w > g.in_w ? (need_w - g.in_w) / 2 : 0;
  } else {
    if (g.kernel_h > g.in_h || g.kernel_w > g.in_w) {
      throw ShapeError("conv2d kernel " + shape_string(weights) + " does not fit input " +
                       shape_string(input));
    }
    g.out_h = (g.in_h - g.kernel_h) / stride + 1;
    g.out_w = (g.in_w - g.kernel_w) / stride + 1;
  }
  return g;
}

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const LayerParams<T>& p, std::size_t stride,
                         Padding padding, Conv2dCache<T>* cache) {
  const ConvGeometry g = conv_geometry(x.shape(), p.weights.shape(), stride, padding);
  if (p.bias.size() != g.out_channels) {
    throw ShapeError("conv2d bias of " + p.name + " has " + std::to_string(p.bias.size()) +
                     " entries, expected " + std::to_string(g.out_channels));
  }
  const std::size_t patch = g.in_channels * g.kernel_h * g.kernel_w;
  const std::size_t positions = g.out_h * g.out_w;
  const std::size_t in_stride = g.in_channels * g.in_h * g.in_w;
  Tensor<T> out({g.batch, g.out_channels, g.out_h, g.out_w}, T(0));
  ConstMapMatrix<T> w(p.weights.raw(), idx(g.out_channels), idx(patch));
  Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> b(p.bias.raw(), idx(g.out_channels));

  parallel_for(g.batch, [&](std::size_t n) {
    std::vector<T> col(patch * positions);
    im2col(x.raw() + n * in_stride, g, col.data());
    ConstMapMatrix<T> cols(col.data(), idx(patch), idx(positions));
    MapMatrix<T> y(out.raw() + n * g.out_channels * positions, idx(g.out_channels),
                   idx(positions));
    y.noalias() = w * cols;
    y.colwise() += b;
  });

  if (cache) *cache = {x, p.weights, g};
  return out;
}

template <typename T>
LayerGrads<T> conv2d_backward(const Conv2dCache<T>& cache, const Tensor<T>& grad_out) {
  const ConvGeometry& g = cache.geometry;
  require_same_shape(grad_out.shape(), Shape{g.batch, g.out_channels, g.out_h, g.out_w},
                     "conv2d_backward grad_out");
  const std::size_t patch = g.in_channels * g.kernel_h * g.kernel_w;
  const std::size_t positions = g.out_h * g.out_w;
  const std::size_t in_stride = g.in_channels * g.in_h * g.in_w;
  const std::size_t w_size = g.out_channels * patch;

  LayerGrads<T> grads;
  grads.grad_input = Tensor<T>(cache.input.shape(), T(0));
  ConstMapMatrix<T> w(cache.weights.raw(), idx(g.out_channels), idx(patch));

  // Per-sample partial weight/bias gradients, reduced below in sample order.
  std::vector<T> partial_w(g.batch * w_size);
  std::vector<T> partial_b(g.batch * g.out_channels);
  parallel_for(g.batch, [&](std::size_t n) {
    std::vector<T> col(patch * positions);
    im2col(cache.input.raw() + n * in_stride, g, col.data());
    ConstMapMatrix<T> cols(col.data(), idx(patch), idx(positions));
    ConstMapMatrix<T> gy(grad_out.raw() + n * g.out_channels * positions, idx(g.out_channels),
                         idx(positions));
    MapMatrix<T> gw(partial_w.data() + n * w_size, idx(g.out_channels), idx(patch));
    gw.noalias() = gy * cols.transpose();
    for (std::size_t c = 0; c < g.out_channels; ++c) {
      T acc = 0;
      const T* row = grad_out.raw() + (n * g.out_channels + c) * positions;
      for (std::size_t i = 0; i < positions; ++i) acc += row[i];
      partial_b[n * g.out_channels + c] = acc;
    }
    MapMatrix<T> gcol(col.data(), idx(patch), idx(positions));
    gcol.noalias() = w.transpose() * gy;
    col2im(col.data(), g, grads.grad_input.raw() + n * in_stride);
  });

  grads.grad_weights = Tensor<T>(cache.weights.shape(), T(0));
  grads.grad_bias = Tensor<T>({g.out_channels}, T(0));
  T* gw = grads.grad_weights.raw();
  T* gb = grads.grad_bias.raw();
  for (std::size_t n = 0; n < g.batch; ++n) {
    const T* pw = partial_w.data() + n * w_size;
    for (std::size_t i = 0; i < w_size; ++i) gw[i] += pw[i];
    const T* pb = partial_b.data() + n * g.out_channels;
    for (std::size_t c = 0; c < g.out_channels; ++c) gb[c] += pb[c];
  }
  return grads;
}

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const LayerParams<T>& p, DenseCache<T>* cache) {
  require_rank(x.shape(), 2, "dense input");
  require_rank(p.weights.shape(), 2, "dense weights");
  if (x.dim(1) != p.weights.dim(0)) {
    throw ShapeError("dense " + p.name + ": input width " + std::to_string(x.dim(1)) +
                     " does not match weights " + shape_string(p.weights.shape()));
  }
  const std::size_t units = p.weights.dim(1);
  if (p.bias.size() != units) {
    throw ShapeError("dense bias of " + p.name + " has " + std::to_string(p.bias.size()) +
                     " entries, expected " + std::to_string(units));
  }
  Tensor<T> out = matmul(x, p.weights);
  T* o = out.raw();
  for (std::size_t n = 0; n < x.dim(0); ++n)
    for (std::size_t u = 0; u < units; ++u) o[n * units + u] += p.bias[u];
  if (cache) *cache = {x, p.weights};
  return out;
}

template <typename T>
LayerGrads<T> dense_backward(const DenseCache<T>& cache, const Tensor<T>& grad_out) {
  const std::size_t batch = cache.input.dim(0);
  const std::size_t units = cache.weights.dim(1);
  require_same_shape(grad_out.shape(), Shape{batch, units}, "dense_backward grad_out");
  LayerGrads<T> grads;
  grads.grad_input = matmul(grad_out, transpose(cache.weights));
  grads.grad_weights = matmul(transpose(cache.input), grad_out);
  grads.grad_bias = Tensor<T>({units}, T(0));
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t u = 0; u < units; ++u) grads.grad_bias[u] += grad_out[n * units + u];
  return grads;
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
  return map(x, [](T v) { return v > T(0) ? v : T(0); });
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out) {
  require_same_shape(x.shape(), grad_out.shape(), "relu_backward");
  Tensor<T> out(x.shape(), T(0));
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > T(0) ? grad_out[i] : T(0);
  return out;
}

template <typename T>
Tensor<T> sigmoid_forward(const Tensor<T>& x) {
  return map(x, [](T v) {
    if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
    const T e = std::exp(v);
    return e / (T(1) + e);
  });
}

template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& y, const Tensor<T>& grad_out) {
  require_same_shape(y.shape(), grad_out.shape(), "sigmoid_backward");
  Tensor<T> out(y.shape(), T(0));
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = grad_out[i] * y[i] * (T(1) - y[i]);
  return out;
}

template <typename T>
Tensor<T> softmax_forward(const Tensor<T>& logits) {
  require_rank(logits.shape(), 2, "softmax input");
  const std::size_t rows = logits.dim(0), k = logits.dim(1);
  Tensor<T> out(logits.shape(), T(0));
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = logits.raw() + r * k;
    T* o = out.raw() + r * k;
    T peak = -std::numeric_limits<T>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
      if (!std::isfinite(in[j])) {
        throw NumericError("softmax: non-finite logit in row " + std::to_string(r));
      }
      peak = std::max(peak, in[j]);
    }
    T total = 0;
    for (std::size_t j = 0; j < k; ++j) {
      o[j] = std::exp(in[j] - peak);
      total += o[j];
    }
    for (std::size_t j = 0; j < k; ++j) o[j] /= total;
  }
  return out;
}

template <typename T>
Tensor<T> softmax_backward(const Tensor<T>& probs, const Tensor<T>& grad_out) {
  require_same_shape(probs.shape(), grad_out.shape(), "softmax_backward");
  const std::size_t rows = probs.dim(0), k = probs.dim(1);
  Tensor<T> out(probs.shape(), T(0));
  for (std::size_t r = 0; r < rows; ++r) {
    const T* y = probs.raw() + r * k;
    const T* g = grad_out.raw() + r * k;
    T dot = 0;
    for (std::size_t j = 0; j < k; ++j) dot += g[j] * y[j];
    for (std::size_t j = 0; j < k; ++j) out[r * k + j] = y[j] * (g[j] - dot);
  }
  return out;
}

template <typename T>
Tensor<T> gap_forward(const Tensor<T>& x) {
  require_rank(x.shape(), 4, "gap input");
  const std::size_t planes = x.dim(0) * x.dim(1);
  const std::size_t area = x.dim(2) * x.dim(3);
  Tensor<T> out({x.dim(0), x.dim(1)}, T(0));
  for (std::size_t p = 0; p < planes; ++p) {
    const T* in = x.raw() + p * area;
    T acc = 0;
    for (std::size_t i = 0; i < area; ++i) acc += in[i];
    out[p] = acc / static_cast<T>(area);
  }
  return out;
}

template <typename T>
Tensor<T> gap_backward(const Shape& input_shape, const Tensor<T>& grad_out) {
  require_rank(input_shape, 4, "gap_backward input shape");
  require_same_shape(grad_out.shape(), Shape{input_shape[0], input_shape[1]}, "gap_backward");
  const std::size_t area = input_shape[2] * input_shape[3];
  Tensor<T> out(input_shape, T(0));
  for (std::size_t p = 0; p < grad_out.size(); ++p) {
    const T share = grad_out[p] / static_cast<T>(area);
    std::fill(out.raw() + p * area, out.raw() + (p + 1) * area, share);
  }
  return out;
}

template <typename T>
DropoutResult<T> dropout_forward(const Tensor<T>& x, double rate, const ForwardMode& mode) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!mode.training() || rate == 0.0) return {x, Tensor<T>(x.shape(), T(1))};
  const T keep_scale = T(1) / (T(1) - static_cast<T>(rate));
  Rng rng(mode.dropout_seed);
  Tensor<T> mask(x.shape(), T(0));
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = rng.uniform() >= rate ? keep_scale : T(0);
  return {mul(x, mask), std::move(mask)};
}

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& mask, const Tensor<T>& grad_out) {
  require_same_shape(mask.shape(), grad_out.shape(), "dropout_backward");
  return mul(grad_out, mask);
}

template <typename T>
Tensor<T> maxpool2d_forward(const Tensor<T>& x, MaxPoolCache<T>* cache) {
  require_rank(x.shape(), 4, "maxpool input");
  const std::size_t h = x.dim(2), w = x.dim(3);
  if (h < kPoolWindow || w < kPoolWindow) {
    throw ShapeError("maxpool needs at least 2x2 spatial input, got " + shape_string(x.shape()));
  }
  const std::size_t oh = h / kPoolWindow, ow = w / kPoolWindow;
  const std::size_t planes = x.dim(0) * x.dim(1);
  Tensor<T> out({x.dim(0), x.dim(1), oh, ow}, T(0));
  std::vector<std::size_t> argmax(out.size());
  for (std::size_t p = 0; p < planes; ++p) {
    const std::size_t base = p * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = base + (oy * kPoolWindow) * w + ox * kPoolWindow;
        for (std::size_t dy = 0; dy < kPoolWindow; ++dy) {
          for (std::size_t dx = 0; dx < kPoolWindow; ++dx) {
            const std::size_t i = base + (oy * kPoolWindow + dy) * w + ox * kPoolWindow + dx;
            if (x[i] > x[best]) best = i;
          }
        }
        const std::size_t o = (p * oh + oy) * ow + ox;
        out[o] = x[best];
        argmax[o] = best;
      }
    }
  }
  if (cache) *cache = {x.shape(), std::move(argmax)};
  return out;
}

template <typename T>
Tensor<T> maxpool2d_backward(const MaxPoolCache<T>& cache, const Tensor<T>& grad_out) {
  if (grad_out.size() != cache.argmax.size()) {
    throw ShapeError("maxpool_backward: grad_out " + shape_string(grad_out.shape()) +
                     " does not match the cached forward pass");
  }
  Tensor<T> out(cache.input_shape, T(0));
  for (std::size_t o = 0; o < grad_out.size(); ++o) out[cache.argmax[o]] += grad_out[o];
  return out;
}

#define AENS_INSTANTIATE(T)                                                                  \
  template Tensor<T> conv2d_forward(const Tensor<T>&, const LayerParams<T>&, std::size_t,    \
                                    Padding, Conv2dCache<T>*);                               \
  template LayerGrads<T> conv2d_backward(const Conv2dCache<T>&, const Tensor<T>&);           \
  template Tensor<T> dense_forward(const Tensor<T>&, const LayerParams<T>&, DenseCache<T>*); \
  template LayerGrads<T> dense_backward(const DenseCache<T>&, const Tensor<T>&);             \
  template Tensor<T> relu_forward(const Tensor<T>&);                                         \
  template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> sigmoid_forward(const Tensor<T>&);                                      \
  template Tensor<T> sigmoid_backward(const Tensor<T>&, const Tensor<T>&);                   \
  template Tensor<T> softmax_forward(const Tensor<T>&);                                      \
  template Tensor<T> softmax_backward(const Tensor<T>&, const Tensor<T>&);                   \
  template Tensor<T> gap_forward(const Tensor<T>&);                                          \
  template Tensor<T> gap_backward(const Shape&, const Tensor<T>&);                           \
  template DropoutResult<T> dropout_forward(const Tensor<T>&, double, const ForwardMode&);   \
  template Tensor<T> dropout_backward(const Tensor<T>&, const Tensor<T>&);                   \
  template Tensor<T> maxpool2d_forward(const Tensor<T>&, MaxPoolCache<T>*);                  \
  template Tensor<T> maxpool2d_backward(const MaxPoolCache<T>&, const Tensor<T>&);

AENS_INSTANTIATE(float)
AENS_INSTANTIATE(double)

#undef AENS_INSTANTIATE

}  // namespace aens
