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
#include <span>
#include <string>
#include <vector>

#include "edgecl/ops.hpp"

namespace edgecl {

// Dual-memory output layer. Rows are classes; the last column is the bias
// (the latent is extended with a constant 1). Inference reads cw only.
struct CwrHead {
  CwrHead() = default;
  CwrHead(std::size_t classes, std::size_t latent_dim)
      : cw({classes, latent_dim + 1}),
        tw({classes, latent_dim + 1}),
        past(classes, 0),
        tw_active(classes, false) {}

  std::size_t classes() const { return past.size(); }
  std::size_t latent_dim() const { return cw.dim(1) - 1; }

  Tensor cw;  // consolidated
  Tensor tw;  // temporary, valid between cwr_init and cwr_consolidate
  std::vector<std::uint64_t> past;
  std::vector<bool> tw_active;  // rows trainable during the current experience
};

inline void check_class(const CwrHead& head, int c) {
  if (c < 0 || static_cast<std::size_t>(c) >= head.classes()) {
    throw ArgumentError("class id " + std::to_string(c) + " outside [0," + std::to_string(head.classes()) + ")");
  }
}

// Copies cw rows of the experience classes into tw; every other tw row is
// zeroed and marked untrainable.
inline void cwr_init(CwrHead& head, std::span<const int> classes_in_exp) {
  for (int c : classes_in_exp) check_class(head, c);
  head.tw.fill(0.0f);
  std::fill(head.tw_active.begin(), head.tw_active.end(), false);
  for (int c : classes_in_exp) {
    auto src = head.cw.row(static_cast<std::size_t>(c));
    std::copy(src.begin(), src.end(), head.tw.row(static_cast<std::size_t>(c)).begin());
    head.tw_active[static_cast<std::size_t>(c)] = true;
  }
}

// For each experience class j:
//   w = sqrt(past[j] / cur[j])
//   cw[j] = (cw[j] * w + (tw[j] - mean of tw rows over the experience classes)) / (w + 1)
//   past[j] += cur[j]
// cur_counts is indexed by class id.
inline void cwr_consolidate(CwrHead& head, std::span<const int> classes_in_exp,
                            std::span<const std::uint64_t> cur_counts) {
  if (cur_counts.size() != head.classes()) {
    throw DimensionError("cur_counts has " + std::to_string(cur_counts.size()) + " entries for " +
                         std::to_string(head.classes()) + " classes");
  }
  for (int c : classes_in_exp) {
    check_class(head, c);
    if (cur_counts[static_cast<std::size_t>(c)] == 0) {
      throw ArgumentError("class " + std::to_string(c) + " is in the experience but has zero patterns");
    }
  }
  if (classes_in_exp.empty()) return;
  const std::size_t width = head.cw.dim(1);
  std::vector<float> mean(width, 0.0f);
  for (int c : classes_in_exp) {
    auto r = head.tw.row(static_cast<std::size_t>(c));
    for (std::size_t k = 0; k < width; ++k) mean[k] += r[k];
  }
  for (float& m : mean) m /= static_cast<float>(classes_in_exp.size());
  for (int c : classes_in_exp) {
    const auto j = static_cast<std::size_t>(c);
    const float wpast = std::sqrt(static_cast<float>(head.past[j]) / static_cast<float>(cur_counts[j]));
    auto cw = head.cw.row(j);
    auto tw = head.tw.row(j);
    for (std::size_t k = 0; k < width; ++k) cw[k] = (cw[k] * wpast + (tw[k] - mean[k])) / (wpast + 1.0f);
    head.past[j] += cur_counts[j];
  }
}

// Class-row layout <-> dense layer layout (weights [d, classes], bias [classes]).
inline LayerParams rows_to_dense(const Tensor& rows) {
  const std::size_t classes = rows.dim(0), d = rows.dim(1) - 1;
  LayerParams p{LayerKind::dense, Tensor({d, classes}), Tensor({classes}), {}};
  for (std::size_t j = 0; j < classes; ++j) {
    for (std::size_t k = 0; k < d; ++k) p.weights[k * classes + j] = rows[j * (d + 1) + k];
    p.bias[j] = rows[j * (d + 1) + d];
  }
  return p;
}

inline void dense_to_rows(const LayerParams& p, Tensor& rows) {
  const std::size_t d = p.weights.dim(0), classes = p.weights.dim(1);
  if (rows.shape() != Shape{classes, d + 1}) {
    throw DimensionError("head rows " + to_string(rows.shape()) + " incompatible with dense weights " +
                         to_string(p.weights.shape()));
  }
  for (std::size_t j = 0; j < classes; ++j) {
    for (std::size_t k = 0; k < d; ++k) rows[j * (d + 1) + k] = p.weights[k * classes + j];
    rows[j * (d + 1) + d] = p.bias[j];
  }
}

// Writes row-layout weights into an existing dense layer's parameters.
inline void load_rows(LayerParams& dense, const Tensor& rows) {
  LayerParams p = rows_to_dense(rows);
  if (p.weights.shape() != dense.weights.shape()) {
    throw DimensionError("head rows " + to_string(rows.shape()) + " do not fit dense weights " +
                         to_string(dense.weights.shape()));
  }
  dense.weights.values() = std::move(p.weights.values());
  dense.bias.values() = std::move(p.bias.values());
}

// Zeroes gradient columns (weights) and entries (bias) of inactive classes.
inline void mask_class_grads(LayerParams& dense, const std::vector<bool>& active) {
  const std::size_t d = dense.weights.dim(0), classes = dense.weights.dim(1);
  auto gw = dense.weights.grad();
  auto gb = dense.bias.grad();
  for (std::size_t j = 0; j < classes; ++j) {
    if (active[j]) continue;
    for (std::size_t k = 0; k < d; ++k) gw[k * classes + j] = 0.0f;
    gb[j] = 0.0f;
  }
}

// Logits of features [batch, d] under row-layout weights.
inline Tensor head_logits(const Tensor& rows, const Tensor& features) {
  return dense_forward(rows_to_dense(rows), features);
}

inline std::vector<bool> seen_classes(const CwrHead& head) {
  std::vector<bool> seen(head.classes());
  for (std::size_t j = 0; j < head.classes(); ++j) seen[j] = head.past[j] > 0;
  return seen;
}

// Top-1 over the classes flagged in `allowed`; -1 if none is allowed.
inline std::vector<int> argmax_rows(const Tensor& logits, const std::vector<bool>& allowed) {
  std::vector<int> out(logits.dim(0), -1);
  const std::size_t classes = logits.dim(1);
  for (std::size_t b = 0; b < logits.dim(0); ++b) {
    float best = -INFINITY;
    for (std::size_t j = 0; j < classes; ++j) {
      if (!allowed[j]) continue;
      const float v = logits[b * classes + j];
      if (out[b] < 0 || v > best) {
        best = v;
        out[b] = static_cast<int>(j);
      }
    }
  }
  return out;
}

// Predictions from consolidated weights over the classes seen so far.
inline std::vector<int> cwr_predict(const CwrHead& head, const Tensor& features) {
  return argmax_rows(head_logits(head.cw, features), seen_classes(head));
}

}  // namespace edgecl
