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
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <stop_token>
#include <string>
#include <vector>

#include "edgecl/cwr.hpp"
#include "edgecl/network.hpp"
#include "edgecl/replay_buffer.hpp"
#include "edgecl/stream.hpp"
#include "edgecl/synaptic.hpp"
#include "edgecl/timing.hpp"
#include "json.hpp"

namespace edgecl {

enum class StrategyKind { ar1, naive, replay_balanced, replay_unbalanced };

inline const char* to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::ar1: return "ar1";
    case StrategyKind::naive: return "naive";
    case StrategyKind::replay_balanced: return "replay-balanced";
    case StrategyKind::replay_unbalanced: return "replay-unbalanced";
  }
  return "unknown";
}

inline StrategyKind strategy_kind_from_string(const std::string& s) {
  if (s == "ar1") return StrategyKind::ar1;
  if (s == "naive") return StrategyKind::naive;
  if (s == "replay-balanced") return StrategyKind::replay_balanced;
  if (s == "replay-unbalanced") return StrategyKind::replay_unbalanced;
  throw ConfigError("unknown strategy kind '" + s + "'");
}

struct StrategyConfig {
  std::string name;  // report label; defaults to "<kind>-<cut>"
  StrategyKind kind = StrategyKind::ar1;
  std::string cut = "pool";
  std::size_t epochs = 8;
  std::size_t current_batch = 10;  // b1
  std::size_t replay_batch = 10;   // b2
  float lr = 0.1f;
  float below_cut_lr_scale = 1.0f;  // lr multiplier for trainable layers below the cut
  float lambda = 0.5f;
  float importance_cap = 0.001f;
  float damping = 1e-3f;
  std::size_t buffer_capacity = 180;  // 0 disables replay
  std::size_t replace_count = 10;    // k of the unbalanced policy
  bool retain_raw = false;
  std::uint64_t seed = 0;

  std::string label() const { return name.empty() ? std::string(to_string(kind)) + "-" + cut : name; }
  bool uses_cwr() const { return kind == StrategyKind::ar1; }
  bool uses_importance() const { return kind == StrategyKind::ar1; }
  bool uses_replay() const { return kind != StrategyKind::naive && buffer_capacity > 0; }
  ReplacementPolicy policy() const {
    return kind == StrategyKind::replay_unbalanced ? ReplacementPolicy::unbalanced : ReplacementPolicy::balanced;
  }

  void validate() const {
    if (current_batch < 1) throw ConfigError("current_batch (b1) must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (lambda < 0.0f) throw ConfigError("lambda must be >= 0");
    if (!(lr >= 0.0f)) throw ConfigError("lr must be >= 0");
    if (!(below_cut_lr_scale >= 0.0f)) throw ConfigError("below_cut_lr_scale must be >= 0");
    if (importance_cap < 0.0f || damping <= 0.0f) throw ConfigError("importance_cap >= 0 and damping > 0 required");
  }
};

inline void to_json(nlohmann::json& j, const StrategyConfig& c) {
  j = nlohmann::json{{"name", c.label()},
                     {"kind", to_string(c.kind)},
                     {"cut", c.cut},
                     {"epochs", c.epochs},
                     {"current_batch", c.current_batch},
                     {"replay_batch", c.replay_batch},
                     {"lr", c.lr},
                     {"below_cut_lr_scale", c.below_cut_lr_scale},
                     {"lambda", c.lambda},
                     {"importance_cap", c.importance_cap},
                     {"damping", c.damping},
                     {"buffer_capacity", c.buffer_capacity},
                     {"replace_count", c.replace_count},
                     {"retain_raw", c.retain_raw},
                     {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, StrategyConfig& c) {
  StrategyConfig d;
  c.name = j.value("name", d.name);
  c.kind = strategy_kind_from_string(j.value("kind", std::string(to_string(d.kind))));
  c.cut = j.value("cut", d.cut);
  c.epochs = j.value("epochs", d.epochs);
  c.current_batch = j.value("current_batch", d.current_batch);
  c.replay_batch = j.value("replay_batch", d.replay_batch);
  c.lr = j.value("lr", d.lr);
  c.below_cut_lr_scale = j.value("below_cut_lr_scale", d.below_cut_lr_scale);
  c.lambda = j.value("lambda", d.lambda);
  c.importance_cap = j.value("importance_cap", d.importance_cap);
  c.damping = j.value("damping", d.damping);
  c.buffer_capacity = j.value("buffer_capacity", d.buffer_capacity);
  c.replace_count = j.value("replace_count", d.replace_count);
  c.retain_raw = j.value("retain_raw", d.retain_raw);
  c.seed = j.value("seed", d.seed);
  c.validate();
}

struct ExperienceMetrics {
  float mean_loss = 0.0f;
  std::size_t steps = 0;
  std::size_t replaced = 0;
  bool cancelled = false;
  TimingBreakdown timing;
};

// Everything a training context owns. One learner is confined to one thread.
struct Learner {
  StrategyConfig cfg;
  LayeredNetwork net;
  CwrHead head;
  SynapticState synapses;
  ReplayBuffer buffer;
  Rng rng;
};

// ---- pretraining ---------------------------------------------------------------

struct PretrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 16;
  float lr = 0.1f;
};

inline void to_json(nlohmann::json& j, const PretrainConfig& c) {
  j = nlohmann::json{{"epochs", c.epochs}, {"batch_size", c.batch_size}, {"lr", c.lr}};
}
inline void from_json(const nlohmann::json& j, PretrainConfig& c) {
  PretrainConfig d;
  c.epochs = j.value("epochs", d.epochs);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.lr = j.value("lr", d.lr);
}

inline std::vector<std::size_t> shuffled_order(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

// Ordinary mini-batch SGD over every layer, softmax restricted to the classes
// present in the pretraining set. Afterwards cw holds the trained rows of
// those classes, mean-centred; past holds their pattern counts; all other
// rows stay zero.
inline void pretrain_model(LayeredNetwork& net, CwrHead& head, const LabeledSet& data, const PretrainConfig& cfg,
                           Rng& rng) {
  if (head.classes() != net.num_classes() || head.latent_dim() != net.feature_dim()) {
    throw DimensionError("head does not match the network output layer");
  }
  std::vector<bool> active(head.classes(), false);
  std::vector<std::uint64_t> counts(head.classes(), 0);
  for (int l : data.labels) {
    check_class(head, l);
    active[static_cast<std::size_t>(l)] = true;
    ++counts[static_cast<std::size_t>(l)];
  }
  for (std::size_t i = 0; i < net.num_layers(); ++i) net.set_frozen(i, false);
  const std::size_t n = data.size();
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = shuffled_order(n, rng);
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + cfg.batch_size)));
      std::vector<int> labels;
      for (std::size_t i : idx) labels.push_back(data.labels[i]);
      const Tensor logits = net.forward(data.frames.gather_rows(idx));
      const XentResult loss = softmax_xent(logits, labels, active);
      net.mixed_backward(loss.grad, idx.size());
      for (std::size_t i = 0; i < net.num_layers(); ++i) {
        LayerParams& p = net.layer(i).params();
        if (!p.has_params()) continue;
        sgd_step(p.weights, grad_of(p.weights), cfg.lr);
        sgd_step(p.bias, grad_of(p.bias), cfg.lr);
      }
    }
  }
  net.clear_records();
  // The pretraining set is the head's first experience: consolidate it like
  // any other so cw starts mean-centred over the pretraining classes.
  std::vector<int> classes;
  for (std::size_t j = 0; j < head.classes(); ++j) {
    if (active[j]) classes.push_back(static_cast<int>(j));
  }
  head.cw.fill(0.0f);
  std::fill(head.past.begin(), head.past.end(), 0);
  cwr_init(head, classes);
  Tensor rows({head.classes(), head.latent_dim() + 1});
  dense_to_rows(net.output_layer().params(), rows);
  for (int c : classes) {
    auto src = rows.row(static_cast<std::size_t>(c));
    std::copy(src.begin(), src.end(), head.tw.row(static_cast<std::size_t>(c)).begin());
  }
  cwr_consolidate(head, classes, counts);
}

// ---- evaluation ------------------------------------------------------------------

// Top-1 predictions from the representation and cw (never tw).
inline std::vector<int> predict(const LayeredNetwork& net, const CwrHead& head, const Tensor& frames,
                                std::size_t chunk = 256) {
  std::vector<int> out;
  out.reserve(frames.dim(0));
  for (std::size_t start = 0; start < frames.dim(0); start += chunk) {
    const std::size_t count = std::min(chunk, frames.dim(0) - start);
    const auto p = cwr_predict(head, net.features(frames.rows(start, count)));
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

struct Accuracy {
  std::size_t correct = 0;
  std::size_t total = 0;
  double value() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

// Per-class tallies over a labeled set.
inline std::vector<Accuracy> per_class_accuracy(const LayeredNetwork& net, const CwrHead& head, const LabeledSet& set) {
  std::vector<Accuracy> acc(head.classes());
  if (set.size() == 0) return acc;
  const auto pred = predict(net, head, set.frames);
  for (std::size_t i = 0; i < set.size(); ++i) {
    auto& a = acc.at(static_cast<std::size_t>(set.labels[i]));
    ++a.total;
    if (pred[i] == set.labels[i]) ++a.correct;
  }
  return acc;
}

inline Accuracy pooled(const std::vector<Accuracy>& per_class, std::size_t first, std::size_t last) {
  Accuracy out;
  for (std::size_t j = first; j < last && j < per_class.size(); ++j) {
    out.correct += per_class[j].correct;
    out.total += per_class[j].total;
  }
  return out;
}

// ---- learner setup -----------------------------------------------------------------

inline std::vector<LatentPattern> make_patterns(const Tensor& latents, std::span<const int> labels, int source,
                                                const Tensor* raw) {
  std::vector<LatentPattern> out;
  out.reserve(latents.dim(0));
  for (std::size_t i = 0; i < latents.dim(0); ++i) {
    auto r = latents.row(i);
    LatentPattern p{Tensor(latents.row_shape(), std::vector<float>(r.begin(), r.end())), labels[i], source, {}};
    if (raw) {
      auto f = raw->row(i);
      p.raw = Tensor(raw->row_shape(), std::vector<float>(f.begin(), f.end()));
    }
    out.push_back(std::move(p));
  }
  return out;
}

// Builds a learner from a pretrained network/head: applies the strategy's
// cut, freezes the representation for pool-cut variants and seeds the replay
// buffer from the pretraining set.
inline Learner make_learner(const StrategyConfig& cfg, const LayeredNetwork& pretrained, const CwrHead& head,
                            const LabeledSet& pretrain, std::uint64_t seed) {
  cfg.validate();
  Learner l{cfg, pretrained, head, {}, {}, Rng(seed)};
  l.cfg.seed = seed;
  l.net.set_cut(cfg.cut);
  for (std::size_t i = 0; i < l.net.num_layers(); ++i) l.net.set_frozen(i, false);
  // Replay at the penultimate layer keeps everything below it frozen.
  if (cfg.cut == "pool") l.net.freeze_below_cut(true);
  const auto params = l.net.representation_params();
  l.synapses = SynapticState(std::span<const Tensor* const>(params.data(), params.size()), cfg.importance_cap,
                             cfg.damping);
  l.buffer = ReplayBuffer(cfg.uses_replay() ? cfg.buffer_capacity : 0, l.net.latent_shape(), cfg.policy(),
                          cfg.replace_count);
  if (cfg.uses_replay()) {
    const Tensor latents = l.net.extract_latent(pretrain.frames);
    const auto pool = make_patterns(latents, pretrain.labels, -1, cfg.retain_raw ? &pretrain.frames : nullptr);
    l.buffer.seed_from_pretrain(pool, l.rng);
  }
  return l;
}

// ---- per-experience training ----------------------------------------------------------

// One mini-batch step: [current; replay] forward from the cut, backward with
// the replay rows stopped at the cut, SGD on the output layer (restricted to
// `row_mask`) and on trainable representation layers (with the importance
// penalty and trajectory bookkeeping when `synapses` is given).
// `current_frames` is only read when layers below the cut are trainable;
// otherwise `current_latents` (precomputed at the cut) are used.
inline float mixed_sgd_step(LayeredNetwork& net, const Tensor& current_frames, const Tensor& current_latents,
                            const Tensor& replay_latents, std::span<const int> labels, const std::vector<bool>& active,
                            const std::vector<bool>& row_mask, float lr, SynapticState* synapses, float lambda,
                            TimingBreakdown& timing, float below_cut_lr_scale = 1.0f) {
  XentResult loss;
  const std::size_t b1 = net.below_cut_trainable() ? current_frames.dim(0) : current_latents.dim(0);
  {
    ScopedTimer t(timing.forward);
    const Tensor cur = net.below_cut_trainable() ? net.forward_below(current_frames) : current_latents;
    const Tensor logits = net.mixed_forward(cur, replay_latents);
    loss = softmax_xent(logits, labels, active);
  }
  {
    // The output-layer update is folded into the backward phase; the
    // weights_update phase covers representation layers only.
    ScopedTimer t(timing.backward);
    net.mixed_backward(loss.grad, b1);
    LayerParams& out = net.output_layer().params();
    mask_class_grads(out, row_mask);
    sgd_step(out.weights, grad_of(out.weights), lr);
    sgd_step(out.bias, grad_of(out.bias), lr);
  }
  if (net.representation_trainable()) {
    ScopedTimer t(timing.weights_update);
    const auto params = net.representation_params();
    const auto owner = net.representation_param_layers();
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (net.frozen(owner[i])) continue;
      const float rate = owner[i] < net.cut().index ? lr * below_cut_lr_scale : lr;
      Tensor& w = *params[i];
      const Tensor grad = grad_of(w);
      Tensor step = grad;
      if (synapses && lambda > 0.0f) {
        const Tensor pen = si_penalty_grad(*synapses, i, w, lambda);
        for (std::size_t k = 0; k < step.size(); ++k) step[k] += pen[k];
      }
      if (synapses) {
        Tensor before = w;
        before.drop_grad();
        sgd_step(w, step, rate);
        Tensor delta(w.shape());
        for (std::size_t k = 0; k < delta.size(); ++k) delta[k] = w[k] - before[k];
        si_accumulate(*synapses, i, grad, delta);
      } else {
        sgd_step(w, step, rate);
      }
    }
  }
  return loss.loss;
}

// Trains on one experience:
//   1. latents of all frames at the cut (feature extraction)
//   2. cwr_init over the experience class plus the classes held in the buffer
//   3. epochs of [b1 current + b2 replay] mini-batches
//   4. cwr_consolidate (AR1) or copy-back of the trained head rows
//   5. importance consolidation when representation layers were trained (AR1)
//   6. buffer insertion under the configured policy
// A stop request is honoured between mini-batches; a cancelled run returns
// with `cancelled` set and leaves head, synapses and buffer unconsolidated.
inline ExperienceMetrics train_experience(LayeredNetwork& net, CwrHead& head, SynapticState& synapses,
                                          ReplayBuffer& buffer, const Experience& exp, const StrategyConfig& cfg,
                                          Rng& rng, std::stop_token stop = {}) {
  cfg.validate();
  const std::size_t frames = exp.frames.rank() ? exp.frames.dim(0) : 0;
  if (frames == 0) throw ArgumentError("experience holds no frames");
  check_class(head, exp.class_id);
  if (head.latent_dim() != net.feature_dim() || head.classes() != net.num_classes()) {
    throw DimensionError("head does not match the network output layer");
  }
  if (cfg.uses_replay() && buffer.latent_shape() != net.latent_shape()) {
    throw DimensionError("buffer latent shape " + to_string(buffer.latent_shape()) + " differs from cut shape " +
                         to_string(net.latent_shape()));
  }
  ExperienceMetrics m;
  Tensor latents;
  {
    ScopedTimer t(m.timing.feature_extraction);
    latents = net.extract_latent(exp.frames);
  }

  const bool replay = cfg.uses_replay() && !buffer.empty();
  std::vector<bool> active = seen_classes(head);
  active[static_cast<std::size_t>(exp.class_id)] = true;
  std::set<int> exp_classes{exp.class_id};
  std::vector<std::uint64_t> counts(head.classes(), 0);
  counts[static_cast<std::size_t>(exp.class_id)] = frames;
  if (replay) {
    for (const auto& [label, n] : buffer.class_counts()) {
      exp_classes.insert(label);
      counts[static_cast<std::size_t>(label)] += n;
      active[static_cast<std::size_t>(label)] = true;
    }
  }
  const std::vector<int> exp_class_list(exp_classes.begin(), exp_classes.end());

  LayerParams& out = net.output_layer().params();
  std::vector<bool> row_mask = active;
  if (cfg.uses_cwr()) {
    cwr_init(head, exp_class_list);
    load_rows(out, head.tw);
    row_mask = head.tw_active;
  } else {
    load_rows(out, head.cw);
  }

  SynapticState* si = cfg.uses_importance() ? &synapses : nullptr;
  const Shape latent_row = net.latent_shape();
  double loss_sum = 0.0;
  for (std::size_t epoch = 0; epoch < cfg.epochs && !m.cancelled; ++epoch) {
    const auto order = shuffled_order(frames, rng);
    for (std::size_t start = 0; start < frames; start += cfg.current_batch) {
      if (stop.stop_requested()) {
        m.cancelled = true;
        break;
      }
      const std::vector<std::size_t> idx(
          order.begin() + static_cast<std::ptrdiff_t>(start),
          order.begin() + static_cast<std::ptrdiff_t>(std::min(frames, start + cfg.current_batch)));
      std::vector<int> labels(idx.size(), exp.class_id);
      Tensor replay_latents(Shape{0});
      {
        ScopedTimer t(m.timing.forward);
        std::vector<Tensor> rows;
        if (replay) {
          for (std::size_t r : buffer.sample_indices(cfg.replay_batch, rng)) {
            rows.push_back(buffer.entry(r).latent);
            labels.push_back(buffer.entry(r).label);
          }
        }
        replay_latents = stack(rows, latent_row);
      }
      const bool need_frames = net.below_cut_trainable();
      const Tensor cur_frames = need_frames ? exp.frames.gather_rows(idx) : Tensor();
      const Tensor cur_latents = need_frames ? Tensor() : latents.gather_rows(idx);
      loss_sum += mixed_sgd_step(net, cur_frames, cur_latents, replay_latents, labels, active, row_mask, cfg.lr, si,
                                 cfg.lambda, m.timing, cfg.below_cut_lr_scale);
      ++m.steps;
    }
  }
  net.clear_records();
  m.mean_loss = m.steps ? static_cast<float>(loss_sum / static_cast<double>(m.steps)) : 0.0f;
  if (m.cancelled) return m;

  if (cfg.uses_cwr()) {
    dense_to_rows(out, head.tw);
    cwr_consolidate(head, exp_class_list, counts);
  } else {
    Tensor rows(head.cw.shape());
    dense_to_rows(out, rows);
    for (std::size_t j = 0; j < head.classes(); ++j) {
      if (!active[j]) continue;
      auto src = rows.row(j);
      std::copy(src.begin(), src.end(), head.cw.row(j).begin());
    }
    head.past[static_cast<std::size_t>(exp.class_id)] += frames;
  }

  if (si && net.representation_trainable()) {
    const auto params = net.representation_params();
    std::vector<const Tensor*> cparams(params.begin(), params.end());
    si_consolidate(synapses, cparams);
  }

  if (cfg.uses_replay()) {
    const std::vector<int> labels(frames, exp.class_id);
    m.replaced = buffer.insert(make_patterns(latents, labels, static_cast<int>(exp.index),
                                             cfg.retain_raw ? &exp.frames : nullptr),
                               rng);
  }
  return m;
}

inline ExperienceMetrics train_experience(Learner& l, const Experience& exp, std::stop_token stop = {}) {
  return train_experience(l.net, l.head, l.synapses, l.buffer, exp, l.cfg, l.rng, stop);
}

}  // namespace edgecl
