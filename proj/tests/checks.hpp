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

// Check routines shared by the unit tests and the acceptance binary.

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"

namespace checks {

using namespace edgecl;

struct GradReport {
  std::string primitive;
  std::size_t instances = 0;
  double max_rel_error = 0.0;
};

// Upstream weights r so the scalar loss is sum(r * y).
inline GradReport grad_dense(std::size_t instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> dim(1, 6);
  GradReport rep{"dense", instances, 0.0};
  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t b = dim(rng), di = dim(rng), dout = dim(rng);
    LayerParams p{LayerKind::dense, oracle::random_tensor({di, dout}, rng), oracle::random_tensor({dout}, rng), {}};
    Tensor x = oracle::random_tensor({b, di}, rng);
    Tensor r = oracle::random_tensor({b, dout}, rng);
    auto g = dense_backward(p, x, r);
    const auto X = oracle::to_d(x), W = oracle::to_d(p.weights), B = oracle::to_d(p.bias), R = oracle::to_d(r);
    auto loss = [&](const oracle::Vec& xx, const oracle::Vec& ww, const oracle::Vec& bb) {
      return oracle::dot(oracle::dense(xx, ww, bb, b, di, dout), R);
    };
    rep.max_rel_error = std::max({rep.max_rel_error,
                                  oracle::max_rel_error(g.input, oracle::numeric_grad([&](const oracle::Vec& v) { return loss(v, W, B); }, X)),
                                  oracle::max_rel_error(g.weights, oracle::numeric_grad([&](const oracle::Vec& v) { return loss(X, v, B); }, W)),
                                  oracle::max_rel_error(g.bias, oracle::numeric_grad([&](const oracle::Vec& v) { return loss(X, W, v); }, B))});
  }
  return rep;
}

inline GradReport grad_conv(std::size_t instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> dim(1, 3), ext(3, 6), ker(1, 3), str(1, 2), pd(0, 1);
  GradReport rep{"conv2d", instances, 0.0};
  for (std::size_t n = 0; n < instances; ++n) {
    oracle::ConvDims d{dim(rng), dim(rng), ext(rng), ext(rng), dim(rng), ker(rng), str(rng), 0};
    d.pad = pd(rng);
    LayerParams p{LayerKind::conv2d, oracle::random_tensor({d.c_out, d.c_in, d.k, d.k}, rng),
                  oracle::random_tensor({d.c_out}, rng), {d.k, d.stride, d.pad}};
    Tensor x = oracle::random_tensor({d.batch, d.c_in, d.h, d.w}, rng);
    Tensor r = oracle::random_tensor({d.batch, d.c_out, d.oh(), d.ow()}, rng);
    auto g = conv2d_backward(p, x, r, true);
    const auto X = oracle::to_d(x), W = oracle::to_d(p.weights), B = oracle::to_d(p.bias), R = oracle::to_d(r);
    auto loss = [&](const oracle::Vec& xx, const oracle::Vec& ww, const oracle::Vec& bb) {
      return oracle::dot(oracle::conv(xx, ww, bb, d), R);
    };
    rep.max_rel_error = std::max({rep.max_rel_error,
                                  oracle::max_rel_error(g.input, oracle::numeric_grad([&](const oracle::Vec& v) { return loss(v, W, B); }, X)),
                                  oracle::max_rel_error(g.weights, oracle::numeric_grad([&](const oracle::Vec& v) { return loss(X, v, B); }, W)),
                                  oracle::max_rel_error(g.bias, oracle::numeric_grad([&](const oracle::Vec& v) { return loss(X, W, v); }, B))});
  }
  return rep;
}

inline GradReport grad_relu(std::size_t instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> dim(1, 12);
  GradReport rep{"relu", instances, 0.0};
  for (std::size_t n = 0; n < instances; ++n) {
    Tensor x = oracle::random_tensor({dim(rng), dim(rng)}, rng);
    // Keep away from the kink so the central difference does not straddle it.
    for (float& v : x.data()) v = v < 0 ? v - 0.01f : v + 0.01f;
    Tensor r = oracle::random_tensor(x.shape(), rng);
    const auto R = oracle::to_d(r);
    auto num = oracle::numeric_grad([&](const oracle::Vec& v) { return oracle::dot(oracle::relu(v), R); }, oracle::to_d(x));
    rep.max_rel_error = std::max(rep.max_rel_error, oracle::max_rel_error(relu_backward(x, r), num));
  }
  return rep;
}

inline GradReport grad_pool(std::size_t instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> dim(1, 4), ext(1, 6);
  GradReport rep{"global_avg_pool", instances, 0.0};
  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t b = dim(rng), c = dim(rng), h = ext(rng), w = ext(rng);
    Tensor x = oracle::random_tensor({b, c, h, w}, rng);
    Tensor r = oracle::random_tensor({b, c}, rng);
    const auto R = oracle::to_d(r);
    auto num = oracle::numeric_grad([&](const oracle::Vec& v) { return oracle::dot(oracle::gap(v, b * c, h * w), R); },
                                    oracle::to_d(x));
    rep.max_rel_error = std::max(rep.max_rel_error, oracle::max_rel_error(global_avg_pool_backward(x.shape(), r), num));
  }
  return rep;
}

inline GradReport grad_xent(std::size_t instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> dim(1, 6), cls(2, 7);
  GradReport rep{"softmax_xent", instances, 0.0};
  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t b = dim(rng), k = cls(rng);
    Tensor z = oracle::random_tensor({b, k}, rng, -3.0f, 3.0f);
    std::vector<int> labels(b);
    for (int& l : labels) l = static_cast<int>(std::uniform_int_distribution<std::size_t>(0, k - 1)(rng));
    auto res = softmax_xent(z, labels);
    auto num = oracle::numeric_grad([&](const oracle::Vec& v) { return oracle::xent(v, labels, k); }, oracle::to_d(z));
    rep.max_rel_error = std::max(rep.max_rel_error, oracle::max_rel_error(res.grad, num));
  }
  return rep;
}

inline std::vector<GradReport> all_gradient_checks(std::size_t instances = 100, std::uint64_t seed = 2026) {
  return {grad_dense(instances, seed), grad_conv(instances, seed + 1), grad_relu(instances, seed + 2),
          grad_pool(instances, seed + 3), grad_xent(instances, seed + 4)};
}

// ---- latent replay vs native raw replay ---------------------------------------------

struct EquivalenceReport {
  std::size_t steps = 0;
  double max_param_diff = 0.0;
};

inline Tensor frames_for(std::mt19937_64& rng, std::size_t n, const Shape& row) {
  Shape s{n};
  s.insert(s.end(), row.begin(), row.end());
  return oracle::random_tensor(s, rng);
}

// Input cut, buffer entries are raw frames: train_experience against the
// plain end-to-end loop over [current; sampled buffer frames].
inline EquivalenceReport latent_replay_equivalence(std::uint64_t seed, std::size_t steps = 50) {
  std::mt19937_64 rng(seed);
  const ArchitectureSpec arch{3, 8, 8, 4, 8, 6};
  LayeredNetwork net = LayeredNetwork::build(arch, "input", seed);
  const Shape row = net.input_row_shape();

  StrategyConfig cfg;
  cfg.kind = StrategyKind::replay_balanced;
  cfg.cut = "input";
  cfg.current_batch = 3;
  cfg.replay_batch = 10;
  cfg.lr = 0.05f;
  cfg.buffer_capacity = 40;
  cfg.epochs = (steps + 9) / 10;

  ReplayBuffer buffer(cfg.buffer_capacity, row, ReplacementPolicy::balanced);
  const Tensor stored = frames_for(rng, 40, row);
  for (std::size_t i = 0; i < 40; ++i) {
    auto r = stored.row(i);
    Tensor f(row, std::vector<float>(r.begin(), r.end()));
    buffer.append({f, static_cast<int>(i % 4), -1, f});
  }
  CwrHead head(arch.classes, net.feature_dim());
  for (std::size_t j = 0; j < 4; ++j) {
    head.past[j] = 10;
    for (float& v : head.cw.row(j)) v = std::uniform_real_distribution<float>(-0.5f, 0.5f)(rng);
  }
  Experience exp{0, 4, 0, 0, frames_for(rng, 30, row), {}};

  oracle::PlainNet plain(net);
  Rng ref_rng(seed + 99);
  EquivalenceReport rep;
  rep.steps = oracle::native_raw_replay(plain, head, buffer, exp, cfg, ref_rng, steps);

  Rng rng_lr(seed + 99);
  SynapticState none;
  train_experience(net, head, none, buffer, exp, cfg, rng_lr);
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    const auto& a = net.layer(i).params();
    const auto& b = plain.layers[i].params();
    if (!a.has_params()) continue;
    rep.max_param_diff = std::max({rep.max_param_diff, oracle::max_abs_diff(a.weights, b.weights),
                                   oracle::max_abs_diff(a.bias, b.bias)});
  }
  return rep;
}

// ---- backward stop at the cut -----------------------------------------------------------

struct BackwardStopReport {
  std::size_t instances = 0;
  double max_diff = 0.0;          // mixed vs scaled sub-batch, below-cut grads
  bool zero_when_no_current = true;
};

inline BackwardStopReport backward_stop(std::size_t instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  BackwardStopReport rep{instances, 0.0, true};
  const ArchitectureSpec arch{3, 8, 8, 4, 6, 5};
  for (std::size_t n = 0; n < instances; ++n) {
    LayeredNetwork net = LayeredNetwork::build(arch, "conv2", seed * 1000 + n);
    const std::size_t b1 = std::uniform_int_distribution<std::size_t>(0, 4)(rng);
    const std::size_t b2 = std::uniform_int_distribution<std::size_t>(0, 5)(rng);
    if (b1 + b2 == 0) continue;
    const Tensor cur = frames_for(rng, b1, net.input_row_shape());
    Tensor replay = frames_for(rng, b2, net.latent_shape());
    for (float& v : replay.data()) v = std::max(v, 0.0f);
    std::vector<int> labels(b1 + b2);
    for (int& l : labels) l = static_cast<int>(std::uniform_int_distribution<std::size_t>(0, arch.classes - 1)(rng));

    const Tensor logits = net.mixed_forward(net.forward_below(cur), replay);
    net.mixed_backward(softmax_xent(logits, labels).grad, b1);

    if (b1 == 0) {
      for (std::size_t i = 0; i < net.cut().index; ++i) {
        const auto& p = net.layer(i).params();
        if (!p.has_params()) continue;
        for (float g : p.weights.grad()) rep.zero_when_no_current &= g == 0.0f;
        for (float g : p.bias.grad()) rep.zero_when_no_current &= g == 0.0f;
      }
      continue;
    }
    // Current rows alone through the whole net, loss mean over b1 rows,
    // rescaled to the mixed batch's 1 / (b1 + b2).
    oracle::PlainNet plain(net);
    const std::vector<int> cur_labels(labels.begin(), labels.begin() + static_cast<long>(b1));
    Tensor g = softmax_xent(plain.forward(cur), cur_labels).grad;
    const float scale = static_cast<float>(b1) / static_cast<float>(b1 + b2);
    for (float& v : g.data()) v *= scale;
    plain.backward(g);
    for (std::size_t i = 0; i < net.cut().index; ++i) {
      const auto& a = net.layer(i).params();
      if (!a.has_params()) continue;
      const auto& b = plain.layers[i].params();
      rep.max_diff = std::max({rep.max_diff, oracle::max_abs_diff(grad_of(a.weights), grad_of(b.weights)),
                               oracle::max_abs_diff(grad_of(a.bias), grad_of(b.bias))});
    }
  }
  return rep;
}

// ---- buffer policies ------------------------------------------------------------------

inline std::vector<LatentPattern> patterns(int label, std::size_t n, int source, std::size_t dim = 2) {
  std::vector<LatentPattern> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({Tensor({dim}, static_cast<float>(i)), label, source, {}});
  return out;
}

struct BufferPropertyReport {
  std::size_t sequences = 0;
  std::size_t insertions = 0;
  std::size_t violations = 0;  // band, capacity or count mismatches
};

// Random seedings and class arrival orders; after every insertion the
// present classes must sit within one of each other and capacity must hold.
// Every arrival offers more patterns than the fair share.
inline BufferPropertyReport balanced_band_property(std::size_t sequences, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  BufferPropertyReport rep{sequences, 0, 0};
  for (std::size_t n = 0; n < sequences; ++n) {
    const std::size_t initial = std::uniform_int_distribution<std::size_t>(1, 10)(rng);
    const std::size_t per = std::uniform_int_distribution<std::size_t>(1, 20)(rng);
    const std::size_t capacity = initial * per;
    ReplayBuffer buf(capacity, {2}, ReplacementPolicy::balanced);
    std::vector<LatentPattern> pool;
    for (std::size_t c = 0; c < initial; ++c) {
      auto p = patterns(static_cast<int>(c), per + 5, -1);
      pool.insert(pool.end(), p.begin(), p.end());
    }
    buf.seed_from_pretrain(pool, rng);
    const std::size_t rounds = std::uniform_int_distribution<std::size_t>(1, 15)(rng);
    for (std::size_t r = 0; r < rounds; ++r) {
      const int label = static_cast<int>(std::uniform_int_distribution<std::size_t>(0, 24)(rng));
      const std::size_t offered = std::uniform_int_distribution<std::size_t>(capacity / 2 + 1, capacity + 10)(rng);
      buf.insert_balanced(patterns(label, offered, static_cast<int>(r)), rng);
      ++rep.insertions;
      const auto counts = buf.class_counts();
      std::size_t lo = capacity, hi = 0;
      for (const auto& [c, k] : counts) {
        lo = std::min(lo, k);
        hi = std::max(hi, k);
      }
      if (buf.size() > capacity || hi - lo > 1 || buf.size() != capacity) ++rep.violations;
    }
  }
  return rep;
}

// Every unbalanced insertion stores exactly min(k, offered) patterns.
inline BufferPropertyReport unbalanced_count_property(std::size_t sequences, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  BufferPropertyReport rep{sequences, 0, 0};
  for (std::size_t n = 0; n < sequences; ++n) {
    const std::size_t capacity = std::uniform_int_distribution<std::size_t>(10, 120)(rng);
    const std::size_t k = std::uniform_int_distribution<std::size_t>(0, 12)(rng);
    ReplayBuffer buf(capacity, {2}, ReplacementPolicy::unbalanced, n % 2 ? k : 10);
    for (std::size_t r = 0; r < 12; ++r) {
      const std::size_t offered = std::uniform_int_distribution<std::size_t>(0, 40)(rng);
      const int source = static_cast<int>(r);
      const std::size_t got = buf.insert_unbalanced(patterns(static_cast<int>(r % 5), offered, source), rng);
      ++rep.insertions;
      std::size_t stored = 0;
      for (const auto& e : buf.entries()) stored += e.source == source;
      const std::size_t want = std::min(buf.replace_count(), offered);
      if (got != want || stored != want || buf.size() > capacity) ++rep.violations;
    }
  }
  return rep;
}

}  // namespace checks
