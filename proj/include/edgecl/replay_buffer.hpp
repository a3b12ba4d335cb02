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
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "edgecl/ops.hpp"
#include "edgecl/tensor_io.hpp"

namespace edgecl {

struct LatentPattern {
  Tensor latent;             // cut-layer row shape, no batch dim
  int label = 0;
  int source = -1;           // experience id, -1 for pretraining data
  std::optional<Tensor> raw; // raw frame, retained in two-phase mode only
};

enum class ReplacementPolicy { balanced, unbalanced };

inline const char* to_string(ReplacementPolicy p) { return p == ReplacementPolicy::balanced ? "balanced" : "unbalanced"; }

// Fixed-capacity latent pattern store.
class ReplayBuffer {
 public:
  ReplayBuffer() = default;
  ReplayBuffer(std::size_t capacity, Shape latent_shape, ReplacementPolicy policy, std::size_t k = 10)
      : capacity_(capacity), latent_shape_(std::move(latent_shape)), policy_(policy), k_(k) {}

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const Shape& latent_shape() const { return latent_shape_; }
  ReplacementPolicy policy() const { return policy_; }
  std::size_t replace_count() const { return k_; }

  const std::vector<LatentPattern>& entries() const { return entries_; }
  const LatentPattern& entry(std::size_t i) const { return entries_.at(i); }

  std::map<int, std::size_t> class_counts() const {
    std::map<int, std::size_t> counts;
    for (const auto& e : entries_) ++counts[e.label];
    return counts;
  }

  // Fills the buffer with capacity / num_classes randomly chosen patterns of
  // every class present in the pool.
  void seed_from_pretrain(std::span<const LatentPattern> pool, Rng& rng) {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < pool.size(); ++i) by_class[pool[i].label].push_back(i);
    if (by_class.empty()) throw ArgumentError("pretraining pool is empty");
    if (capacity_ % by_class.size() != 0) {
      throw ConfigError("buffer capacity " + std::to_string(capacity_) + " is not divisible by " +
                        std::to_string(by_class.size()) + " classes");
    }
    const std::size_t per_class = capacity_ / by_class.size();
    for (const auto& [label, idx] : by_class) {
      if (idx.size() < per_class) {
        throw ArgumentError("class " + std::to_string(label) + " offers " + std::to_string(idx.size()) +
                            " patterns, " + std::to_string(per_class) + " required");
      }
    }
    entries_.clear();
    for (auto& [label, idx] : by_class) {
      for (std::size_t i : choose(idx.size(), per_class, rng)) push(pool[idx[i]]);
    }
  }

  // Adds one pattern to a buffer that still has room.
  void append(LatentPattern p) {
    check_latent(p);
    if (entries_.size() >= capacity_) throw StateError("replay buffer is full");
    entries_.push_back(std::move(p));
  }

  std::size_t insert(std::vector<LatentPattern> incoming, Rng& rng) {
    return policy_ == ReplacementPolicy::balanced ? insert_balanced(std::move(incoming), rng)
                                                  : insert_unbalanced(std::move(incoming), rng);
  }

  // Re-quotas over (present classes + incoming classes): every class ends at
  // floor(capacity / classes) or one more, except classes that do not have
  // enough patterns. Overfull classes lose random entries; incoming patterns
  // are a random subset. Returns the number of incoming patterns stored.
  std::size_t insert_balanced(std::vector<LatentPattern> incoming, Rng& rng) {
    if (incoming.empty()) return 0;
    for (const auto& p : incoming) check_latent(p);
    std::map<int, std::size_t> current = class_counts();
    std::map<int, std::vector<std::size_t>> offered;
    for (std::size_t i = 0; i < incoming.size(); ++i) offered[incoming[i].label].push_back(i);

    std::map<int, std::size_t> avail = current;
    for (const auto& [label, idx] : offered) avail[label] += idx.size();
    const std::map<int, std::size_t> target = balanced_targets(avail, current);

    // Evict down to target, remembering freed slots.
    std::vector<std::size_t> freed;
    for (const auto& [label, have] : current) {
      const std::size_t want = target.at(label);
      if (have <= want) continue;
      std::vector<std::size_t> slots;
      for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].label == label) slots.push_back(i);
      for (std::size_t i : choose(slots.size(), have - want, rng)) freed.push_back(slots[i]);
    }
    std::sort(freed.begin(), freed.end());

    std::vector<std::size_t> chosen;
    for (auto& [label, idx] : offered) {
      const std::size_t have = current.count(label) ? current.at(label) : 0;
      const std::size_t want = target.at(label);
      if (want <= have) continue;
      for (std::size_t i : choose(idx.size(), want - have, rng)) chosen.push_back(idx[i]);
    }

    std::size_t next_free = 0;
    std::vector<LatentPattern> appended;
    for (std::size_t i : chosen) {
      if (next_free < freed.size()) {
        entries_[freed[next_free++]] = std::move(incoming[i]);
      } else {
        appended.push_back(std::move(incoming[i]));
      }
    }
    // Slots freed but not refilled are compacted away.
    if (next_free < freed.size()) {
      std::vector<bool> drop(entries_.size(), false);
      for (std::size_t f = next_free; f < freed.size(); ++f) drop[freed[f]] = true;
      std::vector<LatentPattern> kept;
      kept.reserve(entries_.size());
      for (std::size_t i = 0; i < entries_.size(); ++i)
        if (!drop[i]) kept.push_back(std::move(entries_[i]));
      entries_ = std::move(kept);
    }
    for (auto& p : appended) entries_.push_back(std::move(p));
    assert_capacity();
    return chosen.size();
  }

  // Overwrites min(k, offered) uniformly chosen slots with a uniform random
  // subset of the incoming patterns (free slots are used first).
  std::size_t insert_unbalanced(std::vector<LatentPattern> incoming, Rng& rng) {
    const std::size_t m = std::min(k_, incoming.size());
    if (m == 0) return 0;
    for (const auto& p : incoming) check_latent(p);
    const std::vector<std::size_t> picked = choose(incoming.size(), m, rng);
    const std::size_t free_slots = capacity_ - entries_.size();
    const std::size_t appended = std::min(free_slots, m);
    const std::vector<std::size_t> slots = choose(entries_.size(), m - appended, rng);
    for (std::size_t i = 0; i < m; ++i) {
      if (i < slots.size()) {
        entries_[slots[i]] = std::move(incoming[picked[i]]);
      } else {
        entries_.push_back(std::move(incoming[picked[i]]));
      }
    }
    assert_capacity();
    return m;
  }

  // min(n, size) distinct entry indices, uniformly drawn, in random order.
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const {
    if (n == 0 || entries_.empty()) return {};
    return choose(entries_.size(), std::min(n, entries_.size()), rng);
  }

  std::vector<LatentPattern> sample(std::size_t n, Rng& rng) const {
    std::vector<LatentPattern> out;
    for (std::size_t i : sample_indices(n, rng)) out.push_back(entries_[i]);
    return out;
  }

  // Latent payload only: entries * latent elements * 4 bytes.
  std::size_t byte_size() const { return entries_.size() * shape_size(latent_shape_) * sizeof(float); }

  // Replaces every latent (two-phase merge). `latents` is [size, latent...].
  void replace_latents(const Tensor& latents) {
    if (latents.rank() == 0 || latents.dim(0) != entries_.size() || latents.row_shape() != latent_shape_) {
      throw DimensionError("replacement latents " + to_string(latents.shape()) + " do not match buffer of " +
                           std::to_string(entries_.size()) + " x " + to_string(latent_shape_));
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      auto r = latents.row(i);
      entries_[i].latent = Tensor(latent_shape_, std::vector<float>(r.begin(), r.end()));
    }
  }

  bool has_raw() const {
    return !entries_.empty() && std::all_of(entries_.begin(), entries_.end(), [](const auto& e) { return e.raw.has_value(); });
  }

  // Raw frames of all entries as one batch (two-phase mode).
  Tensor raw_batch() const {
    if (!has_raw()) throw StateError("buffer entries carry no raw frames");
    std::vector<Tensor> rows;
    rows.reserve(entries_.size());
    for (const auto& e : entries_) rows.push_back(*e.raw);
    return stack(rows, entries_.front().raw->shape());
  }

  // ---- binary dump -----------------------------------------------------------
  //   char[8] magic "ECLRBUF1"
  //   u32 capacity, u32 policy (0 balanced, 1 unbalanced), u32 k
  //   u32 latent rank, u32 latent dims[rank]
  //   u32 count
  //   u32 has_raw; if 1: u32 raw rank, u32 raw dims[rank]
  //   f32 latents[count * latent elems]
  //   f32 raw frames[count * raw elems]            (only if has_raw)
  //   count x { i32 label, i32 source }             label table
  // All integers and floats little-endian.
  void dump(std::ostream& os) const {
    io::put_magic(os, kMagic);
    io::put_u32(os, static_cast<std::uint32_t>(capacity_));
    io::put_u32(os, policy_ == ReplacementPolicy::balanced ? 0u : 1u);
    io::put_u32(os, static_cast<std::uint32_t>(k_));
    io::put_shape(os, latent_shape_);
    io::put_u32(os, static_cast<std::uint32_t>(entries_.size()));
    const bool raw = has_raw();
    io::put_u32(os, raw ? 1u : 0u);
    if (raw) io::put_shape(os, entries_.front().raw->shape());
    for (const auto& e : entries_) io::put_f32(os, e.latent.data());
    if (raw)
      for (const auto& e : entries_) io::put_f32(os, e.raw->data());
    for (const auto& e : entries_) {
      io::put_i32(os, e.label);
      io::put_i32(os, e.source);
    }
  }

  static ReplayBuffer restore(std::istream& is) {
    io::expect_magic(is, kMagic);
    const std::size_t capacity = io::get_u32(is);
    const std::uint32_t policy = io::get_u32(is);
    if (policy > 1) throw IoError("unknown replacement policy " + std::to_string(policy));
    const std::size_t k = io::get_u32(is);
    ReplayBuffer buf(capacity, io::get_shape(is), policy == 0 ? ReplacementPolicy::balanced : ReplacementPolicy::unbalanced,
                     k);
    const std::size_t count = io::get_u32(is);
    if (count > capacity) throw IoError("dump holds more entries than its capacity");
    const bool raw = io::get_u32(is) == 1;
    Shape raw_shape;
    if (raw) raw_shape = io::get_shape(is);
    buf.entries_.resize(count);
    for (auto& e : buf.entries_) {
      e.latent = Tensor(buf.latent_shape_);
      io::get_f32(is, e.latent.data());
    }
    if (raw) {
      for (auto& e : buf.entries_) {
        e.raw = Tensor(raw_shape);
        io::get_f32(is, e.raw->data());
      }
    }
    for (auto& e : buf.entries_) {
      e.label = io::get_i32(is);
      e.source = io::get_i32(is);
    }
    return buf;
  }

  void save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path + " for writing");
    dump(os);
  }
  static ReplayBuffer load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    return restore(is);
  }

 private:
  static constexpr char kMagic[9] = "ECLRBUF1";

  // m distinct indices of [0, n), uniformly drawn, in random order.
  static std::vector<std::size_t> choose(std::size_t n, std::size_t m, Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    m = std::min(m, n);
    for (std::size_t i = 0; i < m; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(m);
    return idx;
  }

  // Water-filling: classes that cannot reach the level keep everything they
  // have; the rest share the remaining capacity evenly, with the remainder
  // going to the classes currently holding the most entries.
  std::map<int, std::size_t> balanced_targets(const std::map<int, std::size_t>& avail,
                                              const std::map<int, std::size_t>& current) const {
    std::map<int, std::size_t> target;
    std::vector<int> open;
    for (const auto& [label, n] : avail) open.push_back(label);
    std::size_t remaining = capacity_;
    for (bool changed = true; changed && !open.empty();) {
      changed = false;
      const std::size_t level = remaining / open.size();
      std::vector<int> still;
      for (int label : open) {
        if (avail.at(label) <= level) {
          target[label] = avail.at(label);
          remaining -= avail.at(label);
          changed = true;
        } else {
          still.push_back(label);
        }
      }
      open = std::move(still);
    }
    if (open.empty()) return target;
    const std::size_t level = remaining / open.size();
    std::size_t extra = remaining % open.size();
    auto held = [&](int label) { return current.count(label) ? current.at(label) : std::size_t{0}; };
    std::stable_sort(open.begin(), open.end(), [&](int a, int b) { return held(a) > held(b); });
    for (int label : open) {
      target[label] = level + (extra > 0 ? 1 : 0);
      if (extra > 0) --extra;
    }
    return target;
  }

  void check_latent(const LatentPattern& p) const {
    if (p.latent.shape() != latent_shape_) {
      throw DimensionError("pattern latent " + to_string(p.latent.shape()) + " does not match buffer shape " +
                           to_string(latent_shape_));
    }
  }

  void push(const LatentPattern& p) {
    check_latent(p);
    entries_.push_back(p);
    assert_capacity();
  }

  void assert_capacity() const {
    if (entries_.size() > capacity_) throw StateError("replay buffer exceeded its capacity");
  }

  std::size_t capacity_ = 0;
  Shape latent_shape_;
  ReplacementPolicy policy_ = ReplacementPolicy::balanced;
  std::size_t k_ = 10;
  std::vector<LatentPattern> entries_;
};

}  // namespace edgecl
