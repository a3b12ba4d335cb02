/* Copyright (c) 2026 The edgecl Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "edgecl/tensor.hpp"

namespace edgecl {

using Rng = std::mt19937_64;

enum class LayerKind { dense, conv2d, relu, global_avg_pool, softmax_xent };

inline const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::relu: return "relu";
    case LayerKind::global_avg_pool: return "global_avg_pool";
    case LayerKind::softmax_xent: return "softmax_xent";
  }
  return "unknown";
}

inline LayerKind layer_kind_from_string(const std::string& s) {
  if (s == "dense") return LayerKind::dense;
  if (s == "conv2d") return LayerKind::conv2d;
  if (s == "relu") return LayerKind::relu;
  if (s == "global_avg_pool") return LayerKind::global_avg_pool;
  if (s == "softmax_xent") return LayerKind::softmax_xent;
  throw ConfigError("unknown layer kind '" + s + "'");
}

struct ConvGeometry {
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t padding = 1;

  std::size_t out_extent(std::size_t in) const {
    if (in + 2 * padding < kernel || stride == 0) {
      throw DimensionError("kernel " + std::to_string(kernel) + " does not fit extent " + std::to_string(in) +
                           " with padding " + std::to_string(padding));
    }
    return (in + 2 * padding - kernel) / stride + 1;
  }
};

// Dense: weights [d_in, d_out], bias [d_out].
// Conv2d: weights [c_out, c_in, k, k], bias [c_out].
// Parameterless kinds carry empty tensors.
struct LayerParams {
  LayerKind kind = LayerKind::relu;
  Tensor weights;
  Tensor bias;
  ConvGeometry conv;

  bool has_params() const { return kind == LayerKind::dense || kind == LayerKind::conv2d; }
};

struct LayerGrads {
  Tensor input;
  Tensor weights;
  Tensor bias;
};

// Uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
inline void glorot_uniform(Tensor& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const float limit = std::sqrt(6.0f / static_cast<float>(fan_in + fan_out));
  std::uniform_real_distribution<float> dist(-limit, limit);
  for (float& v : w.data()) v = dist(rng);
}

inline LayerParams make_dense(std::size_t d_in, std::size_t d_out, Rng& rng) {
  LayerParams p{LayerKind::dense, Tensor({d_in, d_out}), Tensor({d_out}), {}};
  glorot_uniform(p.weights, d_in, d_out, rng);
  return p;
}

inline LayerParams make_conv2d(std::size_t c_in, std::size_t c_out, Rng& rng, ConvGeometry geom = {}) {
  const std::size_t k = geom.kernel;
  LayerParams p{LayerKind::conv2d, Tensor({c_out, c_in, k, k}), Tensor({c_out}), geom};
  glorot_uniform(p.weights, c_in * k * k, c_out * k * k, rng);
  return p;
}

inline LayerParams make_relu() { return LayerParams{LayerKind::relu, {}, {}, {}}; }
inline LayerParams make_global_avg_pool() { return LayerParams{LayerKind::global_avg_pool, {}, {}, {}}; }

// ---- dense ----------------------------------------------------------------

inline void check_dense(const LayerParams& p, const Tensor& input) {
  if (p.weights.rank() != 2 || p.bias.rank() != 1 || p.bias.dim(0) != p.weights.dim(1)) {
    throw DimensionError("dense params malformed: weights " + to_string(p.weights.shape()) + ", bias " +
                         to_string(p.bias.shape()));
  }
  if (input.rank() != 2 || input.dim(1) != p.weights.dim(0)) {
    throw DimensionError("dense input " + to_string(input.shape()) + " incompatible with weights " +
                         to_string(p.weights.shape()));
  }
}

inline Tensor dense_forward(const LayerParams& p, const Tensor& input) {
  check_dense(p, input);
  const std::size_t batch = input.dim(0), d_in = input.dim(1), d_out = p.weights.dim(1);
  Tensor out({batch, d_out});
  const float* w = p.weights.data().data();
  for (std::size_t b = 0; b < batch; ++b) {
    float* y = out.data().data() + b * d_out;
    for (std::size_t o = 0; o < d_out; ++o) y[o] = p.bias[o];
    const float* x = input.data().data() + b * d_in;
    for (std::size_t i = 0; i < d_in; ++i) {
      const float xi = x[i];
      const float* wr = w + i * d_out;
      for (std::size_t o = 0; o < d_out; ++o) y[o] += xi * wr[o];
    }
  }
  return out;
}

inline LayerGrads dense_backward(const LayerParams& p, const Tensor& input, const Tensor& upstream) {
  check_dense(p, input);
  const std::size_t batch = input.dim(0), d_in = input.dim(1), d_out = p.weights.dim(1);
  if (upstream.shape() != Shape{batch, d_out}) {
    throw DimensionError("dense upstream " + to_string(upstream.shape()) + " expected " +
                         to_string(Shape{batch, d_out}));
  }
  LayerGrads g{Tensor(input.shape()), Tensor(p.weights.shape()), Tensor(p.bias.shape())};
  const float* w = p.weights.data().data();
  for (std::size_t b = 0; b < batch; ++b) {
    const float* dy = upstream.data().data() + b * d_out;
    const float* x = input.data().data() + b * d_in;
    float* dx = g.input.data().data() + b * d_in;
    for (std::size_t i = 0; i < d_in; ++i) {
      const float* wr = w + i * d_out;
      float* gw = g.weights.data().data() + i * d_out;
      float acc = 0.0f;
      for (std::size_t o = 0; o < d_out; ++o) {
        acc += wr[o] * dy[o];
        gw[o] += x[i] * dy[o];
      }
      dx[i] = acc;
    }
    for (std::size_t o = 0; o < d_out; ++o) g.bias[o] += dy[o];
  }
  return g;
}

// ---- conv2d (cross-correlation, zero padding) -------------------------------

inline void check_conv(const LayerParams& p, const Tensor& input) {
  if (p.weights.rank() != 4 || p.weights.dim(2) != p.conv.kernel || p.weights.dim(3) != p.conv.kernel ||
      p.bias.rank() != 1 || p.bias.dim(0) != p.weights.dim(0)) {
    throw DimensionError("conv2d params malformed: weights " + to_string(p.weights.shape()) + ", bias " +
                         to_string(p.bias.shape()));
  }
  if (input.rank() != 4 || input.dim(1) != p.weights.dim(1)) {
    throw DimensionError("conv2d input " + to_string(input.shape()) + " incompatible with weights " +
                         to_string(p.weights.shape()));
  }
}

inline Shape conv_output_shape(const LayerParams& p, const Shape& in) {
  return {in[0], p.weights.dim(0), p.conv.out_extent(in[2]), p.conv.out_extent(in[3])};
}

// Output positions [lo, hi) whose tap at offset `kk` lands inside an input
// extent of `in`.
inline std::pair<std::size_t, std::size_t> tap_range(std::size_t kk, std::size_t in, std::size_t out, std::size_t s,
                                                     std::size_t pad) {
  const auto off = static_cast<std::ptrdiff_t>(kk) - static_cast<std::ptrdiff_t>(pad);
  const auto ss = static_cast<std::ptrdiff_t>(s);
  std::ptrdiff_t lo = off >= 0 ? 0 : (-off + ss - 1) / ss;
  std::ptrdiff_t hi = (static_cast<std::ptrdiff_t>(in) - 1 - off);
  hi = hi < 0 ? 0 : hi / ss + 1;
  hi = std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(out));
  if (lo > hi) lo = hi;
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

inline Tensor conv2d_forward(const LayerParams& p, const Tensor& input) {
  check_conv(p, input);
  const Shape os = conv_output_shape(p, input.shape());
  const std::size_t batch = os[0], c_out = os[1], oh = os[2], ow = os[3];
  const std::size_t c_in = input.dim(1), ih = input.dim(2), iw = input.dim(3);
  const std::size_t k = p.conv.kernel, s = p.conv.stride;
  const std::size_t pad = p.conv.padding;
  Tensor out(os);
  const float* x = input.data().data();
  const float* w = p.weights.data().data();
  float* y = out.data().data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t co = 0; co < c_out; ++co) {
      float* yp = y + ((b * c_out + co) * oh) * ow;
      std::fill(yp, yp + oh * ow, p.bias[co]);
      for (std::size_t ci = 0; ci < c_in; ++ci) {
        const float* xp = x + ((b * c_in + ci) * ih) * iw;
        const float* wp = w + ((co * c_in + ci) * k) * k;
        for (std::size_t ky = 0; ky < k; ++ky) {
          const auto [oy0, oy1] = tap_range(ky, ih, oh, s, pad);
          for (std::size_t kx = 0; kx < k; ++kx) {
            const auto [ox0, ox1] = tap_range(kx, iw, ow, s, pad);
            const float wv = wp[ky * k + kx];
            for (std::size_t oy = oy0; oy < oy1; ++oy) {
              const float* xr = xp + (oy * s + ky - pad) * iw;
              float* yr = yp + oy * ow;
              if (s == 1) {
                const float* xs = xr + (ox0 + kx - pad);
                for (std::size_t ox = 0; ox < ox1 - ox0; ++ox) yr[ox0 + ox] += wv * xs[ox];
              } else {
                for (std::size_t ox = ox0; ox < ox1; ++ox) yr[ox] += wv * xr[ox * s + kx - pad];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

// Input gradient is skipped (left empty) when need_input_grad is false; the
// first layer of a network never needs it.
inline LayerGrads conv2d_backward(const LayerParams& p, const Tensor& input, const Tensor& upstream,
                                  bool need_input_grad = true) {
  check_conv(p, input);
  const Shape os = conv_output_shape(p, input.shape());
  if (upstream.shape() != os) {
    throw DimensionError("conv2d upstream " + to_string(upstream.shape()) + " expected " + to_string(os));
  }
  const std::size_t batch = os[0], c_out = os[1], oh = os[2], ow = os[3];
  const std::size_t c_in = input.dim(1), ih = input.dim(2), iw = input.dim(3);
  const std::size_t k = p.conv.kernel, s = p.conv.stride;
  const std::size_t pad = p.conv.padding;
  LayerGrads g{need_input_grad ? Tensor(input.shape()) : Tensor(), Tensor(p.weights.shape()), Tensor(p.bias.shape())};
  const float* x = input.data().data();
  const float* w = p.weights.data().data();
  const float* dy = upstream.data().data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t co = 0; co < c_out; ++co) {
      const float* dyp = dy + ((b * c_out + co) * oh) * ow;
      float bsum = 0.0f;
      for (std::size_t i = 0; i < oh * ow; ++i) bsum += dyp[i];
      g.bias[co] += bsum;
      for (std::size_t ci = 0; ci < c_in; ++ci) {
        const float* xp = x + ((b * c_in + ci) * ih) * iw;
        float* dxp = need_input_grad ? g.input.data().data() + ((b * c_in + ci) * ih) * iw : nullptr;
        const float* wp = w + ((co * c_in + ci) * k) * k;
        float* gwp = g.weights.data().data() + ((co * c_in + ci) * k) * k;
        for (std::size_t ky = 0; ky < k; ++ky) {
          const auto [oy0, oy1] = tap_range(ky, ih, oh, s, pad);
          for (std::size_t kx = 0; kx < k; ++kx) {
            const auto [ox0, ox1] = tap_range(kx, iw, ow, s, pad);
            const float wv = wp[ky * k + kx];
            float wacc = 0.0f;
            for (std::size_t oy = oy0; oy < oy1; ++oy) {
              const std::size_t row = (oy * s + ky - pad) * iw;
              const float* xr = xp + row;
              const float* dyr = dyp + oy * ow;
              for (std::size_t ox = ox0; ox < ox1; ++ox) wacc += dyr[ox] * xr[ox * s + kx - pad];
              if (dxp) {
                float* dxr = dxp + row;
                for (std::size_t ox = ox0; ox < ox1; ++ox) dxr[ox * s + kx - pad] += wv * dyr[ox];
              }
            }
            gwp[ky * k + kx] += wacc;
          }
        }
      }
    }
  }
  return g;
}

// ---- relu -------------------------------------------------------------------

inline Tensor relu_forward(const Tensor& input) {
  Tensor out = input;
  for (float& v : out.data()) v = v > 0.0f ? v : 0.0f;
  return out;
}

inline Tensor relu_backward(const Tensor& input, const Tensor& upstream) {
  if (input.shape() != upstream.shape()) {
    throw DimensionError("relu upstream " + to_string(upstream.shape()) + " expected " + to_string(input.shape()));
  }
  Tensor g(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) g[i] = input[i] > 0.0f ? upstream[i] : 0.0f;
  return g;
}

// ---- global average pooling: [b, c, h, w] -> [b, c] ------------------------

inline Tensor global_avg_pool_forward(const Tensor& input) {
  if (input.rank() != 4) throw DimensionError("global_avg_pool expects rank-4 input, got " + to_string(input.shape()));
  const std::size_t batch = input.dim(0), c = input.dim(1), hw = input.dim(2) * input.dim(3);
  Tensor out({batch, c});
  const float inv = 1.0f / static_cast<float>(hw);
  for (std::size_t i = 0; i < batch * c; ++i) {
    const float* p = input.data().data() + i * hw;
    float acc = 0.0f;
    for (std::size_t j = 0; j < hw; ++j) acc += p[j];
    out[i] = acc * inv;
  }
  return out;
}

inline Tensor global_avg_pool_backward(const Shape& input_shape, const Tensor& upstream) {
  const std::size_t batch = input_shape[0], c = input_shape[1], hw = input_shape[2] * input_shape[3];
  if (upstream.shape() != Shape{batch, c}) {
    throw DimensionError("global_avg_pool upstream " + to_string(upstream.shape()) + " expected " +
                         to_string(Shape{batch, c}));
  }
  Tensor g(input_shape);
  const float inv = 1.0f / static_cast<float>(hw);
  for (std::size_t i = 0; i < batch * c; ++i) {
    float* p = g.data().data() + i * hw;
    std::fill(p, p + hw, upstream[i] * inv);
  }
  return g;
}

// ---- softmax cross-entropy ---------------------------------------------------

struct XentResult {
  float loss = 0.0f;  // mean over rows
  Tensor grad;        // d(mean loss)/d(logits)
};

// Classes with active[j] == false are excluded from the softmax (their logits
// get zero gradient). An empty mask means every class is active. Labels must
// name active classes.
inline XentResult softmax_xent(const Tensor& logits, std::span<const int> labels,
                               const std::vector<bool>& active = {}) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size()) {
    throw DimensionError("softmax_xent logits " + to_string(logits.shape()) + " vs " +
                         std::to_string(labels.size()) + " labels");
  }
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  if (!active.empty() && active.size() != classes) {
    throw DimensionError("softmax_xent mask has " + std::to_string(active.size()) + " entries for " +
                         std::to_string(classes) + " classes");
  }
  auto on = [&](std::size_t j) { return active.empty() || active[j]; };
  XentResult r{0.0f, Tensor(logits.shape())};
  if (batch == 0) return r;
  const float inv_batch = 1.0f / static_cast<float>(batch);
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const int label = labels[b];
    if (label < 0 || static_cast<std::size_t>(label) >= classes || !on(static_cast<std::size_t>(label))) {
      throw ArgumentError("label " + std::to_string(label) + " is not an active class");
    }
    const float* z = logits.data().data() + b * classes;
    float* g = r.grad.data().data() + b * classes;
    float zmax = -INFINITY;
    for (std::size_t j = 0; j < classes; ++j)
      if (on(j)) zmax = std::max(zmax, z[j]);
    float denom = 0.0f;
    for (std::size_t j = 0; j < classes; ++j)
      if (on(j)) denom += std::exp(z[j] - zmax);
    const float log_denom = std::log(denom);
    for (std::size_t j = 0; j < classes; ++j) {
      if (!on(j)) continue;
      const float prob = std::exp(z[j] - zmax - log_denom);
      g[j] = (prob - (static_cast<int>(j) == label ? 1.0f : 0.0f)) * inv_batch;
    }
    total += static_cast<double>(log_denom - (z[label] - zmax));
  }
  r.loss = static_cast<float>(total / static_cast<double>(batch));
  if (!std::isfinite(r.loss)) throw NumericError("softmax_xent produced a non-finite loss");
  return r;
}

// ---- SGD ---------------------------------------------------------------------

// w <- w - lr * g. Refuses the whole step if any gradient is non-finite.
inline void sgd_step(Tensor& weights, const Tensor& grads, float lr) {
  if (weights.shape() != grads.shape()) {
    throw DimensionError("sgd_step weights " + to_string(weights.shape()) + " vs grads " + to_string(grads.shape()));
  }
  if (!(lr >= 0.0f) || !std::isfinite(lr)) throw ArgumentError("learning rate must be finite and non-negative");
  require_finite(grads, "gradient passed to sgd_step");
  for (std::size_t i = 0; i < weights.size(); ++i) weights[i] -= lr * grads[i];
}

}  // namespace edgecl
