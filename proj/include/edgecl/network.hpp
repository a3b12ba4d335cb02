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

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "edgecl/layer.hpp"
#include "json.hpp"

namespace edgecl {

// A named split position. index counts the layers below the cut, so the
// latent at the cut is the input of layer `index` ("input" = 0).
struct CutPoint {
  std::string name = "input";
  std::size_t index = 0;

  bool operator==(const CutPoint&) const = default;
};

struct ArchitectureSpec {
  std::size_t channels = 3;
  std::size_t height = 16;
  std::size_t width = 16;
  std::size_t conv1_channels = 8;
  std::size_t conv2_channels = 16;
  std::size_t classes = 9;
};

// Ordered layers with named cut positions. The last layer is the dense output
// (classifier) layer; everything before it is the representation. Training
// state: layers [0, cut) record only the current rows of a mixed batch, layers
// [cut, end) record the concatenated [current; replay] batch.
class LayeredNetwork {
 public:
  LayeredNetwork() = default;

  LayeredNetwork(Shape input_row_shape, std::vector<Layer> layers, std::map<std::string, std::size_t> cuts,
                 const std::string& cut, std::uint64_t seed)
      : input_row_shape_(std::move(input_row_shape)),
        layers_(std::move(layers)),
        cuts_(std::move(cuts)),
        frozen_(layers_.size(), false),
        seed_(seed) {
    if (layers_.empty() || layers_.back().kind() != LayerKind::dense) {
      throw ConfigError("network must end with a dense output layer");
    }
    row_shapes_.push_back(input_row_shape_);
    for (const Layer& l : layers_) row_shapes_.push_back(l.output_row_shape(row_shapes_.back()));
    set_cut(cut);
  }

  // input [c,h,w] -> conv3x3(c1)+relu -> conv3x3(c2)+relu ["conv2"] -> global
  // average pool ["pool"] -> dense(classes).
  static LayeredNetwork build(const ArchitectureSpec& arch, const std::string& cut, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Layer> layers;
    layers.emplace_back(make_conv2d(arch.channels, arch.conv1_channels, rng));
    layers.emplace_back(make_relu());
    layers.emplace_back(make_conv2d(arch.conv1_channels, arch.conv2_channels, rng));
    layers.emplace_back(make_relu());
    layers.emplace_back(make_global_avg_pool());
    layers.emplace_back(make_dense(arch.conv2_channels, arch.classes, rng));
    return LayeredNetwork({arch.channels, arch.height, arch.width}, std::move(layers),
                          {{"input", 0}, {"conv2", 4}, {"pool", 5}}, cut, seed);
  }

  const CutPoint& cut() const { return cut_; }
  void set_cut(const std::string& name) {
    auto it = cuts_.find(name);
    if (it == cuts_.end()) throw ConfigError("unknown cut '" + name + "'");
    if (it->second >= layers_.size()) throw ConfigError("cut '" + name + "' does not lie below the output layer");
    cut_ = {name, it->second};
    clear_records();
  }
  const std::map<std::string, std::size_t>& cut_table() const { return cuts_; }

  std::size_t num_layers() const { return layers_.size(); }
  std::size_t output_index() const { return layers_.size() - 1; }
  Layer& layer(std::size_t i) { return layers_.at(i); }
  const Layer& layer(std::size_t i) const { return layers_.at(i); }
  Layer& output_layer() { return layers_.back(); }
  const Layer& output_layer() const { return layers_.back(); }
  std::uint64_t seed() const { return seed_; }

  const Shape& input_row_shape() const { return input_row_shape_; }
  // Row shape entering layer `position` (position == num_layers() -> logits).
  const Shape& row_shape_at(std::size_t position) const { return row_shapes_.at(position); }
  const Shape& latent_shape() const { return row_shapes_[cut_.index]; }
  // Width of the representation fed to the output layer.
  std::size_t feature_dim() const { return row_shapes_[output_index()].at(0); }
  std::size_t num_classes() const { return row_shapes_.back().at(0); }

  bool frozen(std::size_t i) const { return frozen_.at(i); }
  void set_frozen(std::size_t i, bool f) { frozen_.at(i) = f; }
  void freeze_below_cut(bool f) {
    for (std::size_t i = 0; i < cut_.index; ++i) frozen_[i] = f;
  }
  bool below_cut_trainable() const {
    for (std::size_t i = 0; i < cut_.index; ++i)
      if (layers_[i].has_params() && !frozen_[i]) return true;
    return false;
  }

  // Inference through layers [from, to) without recording.
  Tensor infer_range(std::size_t from, std::size_t to, Tensor x) const {
    check_rows(x, from, "infer");
    for (std::size_t i = from; i < to; ++i) x = layers_[i].infer(x);
    return x;
  }
  Tensor infer(const Tensor& batch) const { return infer_range(0, layers_.size(), batch); }
  // Representation fed to the output layer (pool features).
  Tensor features(const Tensor& batch) const { return infer_range(0, output_index(), batch); }

  Tensor extract_latent(const Tensor& batch) const { return infer_range(0, cut_.index, batch); }

  // Recorded forward through layers [0, cut) for the current rows.
  Tensor forward_below(Tensor batch) {
    check_rows(batch, 0, "forward_below");
    for (std::size_t i = 0; i < cut_.index; ++i) batch = layers_[i].forward(batch);
    return batch;
  }

  // Concatenates [current; replay] at the cut and runs a recorded forward to
  // the logits.
  Tensor mixed_forward(const Tensor& current_latent, const Tensor& replay_latent) {
    check_rows(current_latent, cut_.index, "mixed_forward (current)");
    check_rows(replay_latent, cut_.index, "mixed_forward (replay)");
    Tensor x = concat_rows(current_latent, replay_latent);
    mixed_current_rows_ = current_latent.dim(0);
    for (std::size_t i = cut_.index; i < layers_.size(); ++i) x = layers_[i].forward(x);
    return x;
  }

  // Full recorded forward over one batch (no replay rows).
  Tensor forward(const Tensor& batch) {
    Tensor latent = forward_below(batch);
    return mixed_forward(latent, Tensor(with_rows(0, latent_shape())));
  }

  // Backpropagates d(loss)/d(logits) of the last mixed_forward. Layers at or
  // above the cut receive all rows; below the cut only the first
  // `current_rows` rows flow. Frozen layers end with zero gradients.
  void mixed_backward(const Tensor& loss_grads, std::size_t current_rows) {
    const std::size_t out = layers_.size();
    if (!layers_[out - 1].recorded()) throw StateError("mixed_backward called without mixed_forward");
    const std::size_t total = layers_[out - 1].recorded_rows();
    if (current_rows > total) {
      throw ArgumentError("current row count " + std::to_string(current_rows) + " exceeds mixed batch of " +
                          std::to_string(total));
    }
    if (current_rows != mixed_current_rows_) {
      throw ArgumentError("current row count " + std::to_string(current_rows) + " differs from the " +
                          std::to_string(mixed_current_rows_) + " rows of the recorded forward");
    }
    if (loss_grads.shape() != with_rows(total, row_shapes_.back())) {
      throw DimensionError("loss gradient " + to_string(loss_grads.shape()) + " expected " +
                           to_string(with_rows(total, row_shapes_.back())));
    }
    Tensor g = loss_grads;
    const std::size_t lowest_trainable = lowest_trainable_layer();
    for (std::size_t i = out; i-- > cut_.index;) {
      const bool need_input = i > lowest_trainable;
      if (!need_input && !layers_[i].has_params()) break;
      g = layers_[i].backward(g, need_input);
      if (frozen_[i]) layers_[i].zero_param_grads();
    }
    for (std::size_t i = 0; i < cut_.index; ++i) layers_[i].zero_param_grads();
    if (cut_.index == 0 || current_rows == 0 || !below_cut_trainable()) return;

    if (!layers_[cut_.index - 1].recorded() || layers_[cut_.index - 1].recorded_rows() != current_rows) {
      throw StateError("below-cut layers hold no recorded forward for the current rows");
    }
    g = g.rows(0, current_rows);
    for (std::size_t i = cut_.index; i-- > 0;) {
      const bool need_input = i > lowest_trainable;
      if (!need_input && !layers_[i].has_params()) break;
      g = layers_[i].backward(g, need_input);
      if (frozen_[i]) layers_[i].zero_param_grads();
    }
  }

  void zero_grads() {
    for (Layer& l : layers_) l.zero_param_grads();
  }
  void clear_records() {
    for (Layer& l : layers_) l.clear_record();
    mixed_current_rows_ = 0;
  }

  // Parameter tensors of representation layers (everything but the output
  // layer), weights then bias per layer, in layer order.
  std::vector<Tensor*> representation_params() {
    std::vector<Tensor*> out;
    for (std::size_t i = 0; i < output_index(); ++i) {
      if (!layers_[i].has_params()) continue;
      out.push_back(&layers_[i].params().weights);
      out.push_back(&layers_[i].params().bias);
    }
    return out;
  }
  std::vector<const Tensor*> representation_params() const {
    std::vector<const Tensor*> out;
    for (std::size_t i = 0; i < output_index(); ++i) {
      if (!layers_[i].has_params()) continue;
      out.push_back(&layers_[i].params().weights);
      out.push_back(&layers_[i].params().bias);
    }
    return out;
  }
  // Layer index owning each entry of representation_params().
  std::vector<std::size_t> representation_param_layers() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < output_index(); ++i) {
      if (!layers_[i].has_params()) continue;
      out.push_back(i);
      out.push_back(i);
    }
    return out;
  }

  // Representation layers that a training step at the current cut updates.
  bool representation_trainable() const {
    for (std::size_t i = 0; i < output_index(); ++i)
      if (layers_[i].has_params() && !frozen_[i]) return true;
    return false;
  }

 private:
  static Shape with_rows(std::size_t rows, const Shape& row_shape) {
    Shape s{rows};
    s.insert(s.end(), row_shape.begin(), row_shape.end());
    return s;
  }

  void check_rows(const Tensor& x, std::size_t position, const char* what) const {
    if (x.rank() == 0 || x.row_shape() != row_shapes_.at(position)) {
      throw DimensionError(std::string(what) + ": tensor " + to_string(x.shape()) + " does not match row shape " +
                           to_string(row_shapes_.at(position)) + " at position " + std::to_string(position));
    }
  }

  std::size_t lowest_trainable_layer() const {
    for (std::size_t i = 0; i < layers_.size(); ++i)
      if (layers_[i].has_params() && !frozen_[i]) return i;
    return layers_.size();
  }

  Shape input_row_shape_;
  std::vector<Layer> layers_;
  std::vector<Shape> row_shapes_;
  std::map<std::string, std::size_t> cuts_;
  std::vector<bool> frozen_;
  CutPoint cut_;
  std::uint64_t seed_ = 0;
  std::size_t mixed_current_rows_ = 0;
};

// ---- versioned JSON document ---------------------------------------------------

inline constexpr int kNetworkFormatVersion = 1;

inline nlohmann::json network_to_json(const LayeredNetwork& net) {
  using nlohmann::json;
  json layers = json::array();
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    const LayerParams& p = net.layer(i).params();
    json l{{"kind", to_string(p.kind)}, {"frozen", net.frozen(i)}, {"output_shape", net.row_shape_at(i + 1)}};
    if (p.has_params()) {
      l["weights_shape"] = p.weights.shape();
      l["weights"] = p.weights.values();
      l["bias"] = p.bias.values();
    }
    if (p.kind == LayerKind::conv2d) {
      l["kernel"] = p.conv.kernel;
      l["stride"] = p.conv.stride;
      l["padding"] = p.conv.padding;
    }
    layers.push_back(std::move(l));
  }
  json cuts = json::object();
  for (const auto& [name, index] : net.cut_table()) cuts[name] = index;
  return json{{"format", "edgecl.network"}, {"version", kNetworkFormatVersion},
              {"seed", net.seed()},          {"input_shape", net.input_row_shape()},
              {"cut", net.cut().name},       {"cuts", cuts},
              {"layers", layers}};
}

inline LayeredNetwork network_from_json(const nlohmann::json& doc) {
  if (doc.value("format", "") != "edgecl.network") throw ConfigError("not an edgecl.network document");
  if (doc.value("version", 0) != kNetworkFormatVersion) {
    throw ConfigError("unsupported network document version " + std::to_string(doc.value("version", 0)));
  }
  std::vector<Layer> layers;
  std::vector<bool> frozen;
  for (const auto& l : doc.at("layers")) {
    LayerParams p;
    p.kind = layer_kind_from_string(l.at("kind").get<std::string>());
    if (p.has_params()) {
      Shape ws = l.at("weights_shape").get<Shape>();
      p.weights = Tensor(ws, l.at("weights").get<std::vector<float>>());
      auto bias = l.at("bias").get<std::vector<float>>();
      const std::size_t n = bias.size();
      p.bias = Tensor({n}, std::move(bias));
    }
    if (p.kind == LayerKind::conv2d) {
      p.conv = {l.at("kernel").get<std::size_t>(), l.at("stride").get<std::size_t>(),
                l.at("padding").get<std::size_t>()};
    }
    frozen.push_back(l.value("frozen", false));
    layers.emplace_back(std::move(p));
  }
  LayeredNetwork net(doc.at("input_shape").get<Shape>(), std::move(layers),
                     doc.at("cuts").get<std::map<std::string, std::size_t>>(), doc.at("cut").get<std::string>(),
                     doc.at("seed").get<std::uint64_t>());
  for (std::size_t i = 0; i < frozen.size(); ++i) net.set_frozen(i, frozen[i]);
  return net;
}

}  // namespace edgecl
