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

#include <string>
#include <utility>

#include "edgecl/ops.hpp"

namespace edgecl {

// A layer plus the input recorded by its last training forward pass. Parameter
// gradients from backward() land in the weights/bias gradient slots.
class Layer {
 public:
  Layer() = default;
  explicit Layer(LayerParams params) : params_(std::move(params)) {}

  LayerParams& params() { return params_; }
  const LayerParams& params() const { return params_; }
  LayerKind kind() const { return params_.kind; }
  bool has_params() const { return params_.has_params(); }

  Shape output_row_shape(const Shape& in_row) const {
    Shape in{1};
    in.insert(in.end(), in_row.begin(), in_row.end());
    switch (params_.kind) {
      case LayerKind::dense:
        if (in_row.size() != 1 || in_row[0] != params_.weights.dim(0)) {
          throw DimensionError("dense layer expects rows of [" + std::to_string(params_.weights.dim(0)) + "], got " +
                               to_string(in_row));
        }
        return {params_.weights.dim(1)};
      case LayerKind::conv2d: {
        if (in_row.size() != 3 || in_row[0] != params_.weights.dim(1)) {
          throw DimensionError("conv2d layer expects " + std::to_string(params_.weights.dim(1)) +
                               " input channels, got row shape " + to_string(in_row));
        }
        Shape out = conv_output_shape(params_, in);
        return {out[1], out[2], out[3]};
      }
      case LayerKind::relu: return in_row;
      case LayerKind::global_avg_pool:
        if (in_row.size() != 3) throw DimensionError("global_avg_pool expects [c,h,w] rows, got " + to_string(in_row));
        return {in_row[0]};
      case LayerKind::softmax_xent: return in_row;
    }
    return in_row;
  }

  // Forward without touching the recorded state.
  Tensor infer(const Tensor& input) const {
    switch (params_.kind) {
      case LayerKind::dense: return dense_forward(params_, input);
      case LayerKind::conv2d: return conv2d_forward(params_, input);
      case LayerKind::relu: return relu_forward(input);
      case LayerKind::global_avg_pool: return global_avg_pool_forward(input);
      case LayerKind::softmax_xent: break;
    }
    throw StateError("softmax_xent is a loss, not a network layer");
  }

  Tensor forward(const Tensor& input) {
    Tensor out = infer(input);
    input_ = input;
    recorded_ = true;
    return out;
  }

  // Consumes the recorded input. Returns the input gradient (empty when
  // need_input_grad is false and the kind allows skipping it).
  Tensor backward(const Tensor& upstream, bool need_input_grad = true) {
    if (!recorded_) throw StateError(std::string(to_string(params_.kind)) + " backward called without a forward pass");
    switch (params_.kind) {
      case LayerKind::dense: {
        LayerGrads g = dense_backward(params_, input_, upstream);
        store(g);
        return std::move(g.input);
      }
      case LayerKind::conv2d: {
        LayerGrads g = conv2d_backward(params_, input_, upstream, need_input_grad);
        store(g);
        return std::move(g.input);
      }
      case LayerKind::relu: return relu_backward(input_, upstream);
      case LayerKind::global_avg_pool: return global_avg_pool_backward(input_.shape(), upstream);
      case LayerKind::softmax_xent: break;
    }
    throw StateError("softmax_xent is a loss, not a network layer");
  }

  void zero_param_grads() {
    if (!has_params()) return;
    params_.weights.zero_grad();
    params_.bias.zero_grad();
  }

  bool recorded() const { return recorded_; }
  std::size_t recorded_rows() const { return recorded_ ? input_.dim(0) : 0; }
  const Tensor& recorded_input() const {
    if (!recorded_) throw StateError("no recorded forward pass");
    return input_;
  }
  void clear_record() {
    recorded_ = false;
    input_ = Tensor();
  }

 private:
  void store(const LayerGrads& g) {
    zero_param_grads();
    std::copy(g.weights.values().begin(), g.weights.values().end(), params_.weights.grad().begin());
    std::copy(g.bias.values().begin(), g.bias.values().end(), params_.bias.grad().begin());
  }

  LayerParams params_;
  Tensor input_;
  bool recorded_ = false;
};

// Gradient slot of a parameter tensor as a standalone tensor.
inline Tensor grad_of(const Tensor& param) {
  auto g = param.grad();
  return Tensor(param.shape(), std::vector<float>(g.begin(), g.end()));
}

}  // namespace edgecl
