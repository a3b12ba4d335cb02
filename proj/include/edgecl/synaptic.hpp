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

#include <algorithm>
#include <span>
#include <vector>

#include "edgecl/tensor.hpp"

namespace edgecl {

// Trajectory-based weight importance over a list of parameter tensors.
//   omega accumulates -grad * delta over the SGD steps of an experience;
//   at consolidation F += max(omega / ((w - anchor)^2 + damping), 0), capped.
struct SynapticState {
  std::vector<Tensor> importance;  // F
  std::vector<Tensor> anchor;
  std::vector<Tensor> trajectory;  // omega
  float importance_cap = 0.001f;
  float damping = 1e-3f;

  SynapticState() = default;
  SynapticState(std::span<const Tensor* const> params, float cap, float xi) : importance_cap(cap), damping(xi) {
    for (const Tensor* p : params) {
      importance.emplace_back(p->shape());
      anchor.push_back(*p);
      anchor.back().drop_grad();
      trajectory.emplace_back(p->shape());
    }
  }

  std::size_t size() const { return importance.size(); }
};

inline void check_same(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(what) + ": " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
}

inline void si_accumulate(SynapticState& state, std::size_t i, const Tensor& grad, const Tensor& delta) {
  Tensor& omega = state.trajectory.at(i);
  check_same(omega, grad, "si_accumulate grad");
  check_same(omega, delta, "si_accumulate delta");
  for (std::size_t k = 0; k < omega.size(); ++k) omega[k] += -grad[k] * delta[k];
}

inline void si_accumulate(SynapticState& state, std::span<const Tensor> grads, std::span<const Tensor> deltas) {
  if (grads.size() != state.size() || deltas.size() != state.size()) {
    throw DimensionError("si_accumulate expects " + std::to_string(state.size()) + " tensors");
  }
  for (std::size_t i = 0; i < state.size(); ++i) si_accumulate(state, i, grads[i], deltas[i]);
}

inline void si_consolidate(SynapticState& state, std::span<const Tensor* const> current) {
  if (current.size() != state.size()) {
    throw DimensionError("si_consolidate expects " + std::to_string(state.size()) + " tensors");
  }
  for (std::size_t i = 0; i < state.size(); ++i) {
    const Tensor& w = *current[i];
    Tensor& f = state.importance[i];
    Tensor& anchor = state.anchor[i];
    Tensor& omega = state.trajectory[i];
    check_same(f, w, "si_consolidate");
    for (std::size_t k = 0; k < f.size(); ++k) {
      const float d = w[k] - anchor[k];
      const float contrib = omega[k] / (d * d + state.damping);
      f[k] = std::min(f[k] + std::max(contrib, 0.0f), state.importance_cap);
      anchor[k] = w[k];
      omega[k] = 0.0f;
    }
  }
}

// lambda * F * (w - anchor) for parameter i.
inline Tensor si_penalty_grad(const SynapticState& state, std::size_t i, const Tensor& weights, float lambda) {
  const Tensor& f = state.importance.at(i);
  const Tensor& anchor = state.anchor.at(i);
  check_same(f, weights, "si_penalty_grad");
  Tensor out(weights.shape());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = lambda * f[k] * (weights[k] - anchor[k]);
  return out;
}

}  // namespace edgecl
