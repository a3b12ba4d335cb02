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

#include <array>
#include <memory>
#include <random>
#include <mutex>
#include <optional>
#include <stop_token>
#include <thread>
#include <vector>

#include "edgecl/strategy.hpp"

namespace edgecl {

// Fast head-only update at the pool cut on every experience, followed by a
// cancellable background pass that trains deeper layers (slow cut) on a
// snapshot. A finished slow pass is merged by swapping in its representation
// weights and re-deriving the buffer latents from the retained raw frames.
// The consolidated head (cw) is never touched by the slow pass.
class TwoPhaseTrainer {
 public:
  struct SlowResult {
    std::vector<Tensor> representation;
    SynapticState synapses;
    std::size_t source_experience = 0;
  };

  // `fast` must use the pool cut and retain raw frames. slow_epochs == 0
  // still runs (and merges) a slow pass that changes nothing.
  TwoPhaseTrainer(Learner fast, StrategyConfig slow, bool slow_enabled = true)
      : fast_(std::move(fast)), slow_cfg_(std::move(slow)), slow_enabled_(slow_enabled) {
    if (fast_.cfg.cut != "pool") throw ConfigError("fast phase must replay at the pool cut");
    if (slow_enabled_) {
      if (slow_cfg_.cut == "pool") throw ConfigError("slow phase must use a cut below pool");
      if (!fast_.cfg.retain_raw) throw ConfigError("two-phase mode requires retain_raw");
    }
  }

  ~TwoPhaseTrainer() { cancel(); }
  TwoPhaseTrainer(const TwoPhaseTrainer&) = delete;
  TwoPhaseTrainer& operator=(const TwoPhaseTrainer&) = delete;

  Learner& learner() { return fast_; }
  const Learner& learner() const { return fast_; }

  // Merges a finished slow pass, cancels one still running, trains the head
  // synchronously and schedules the next slow pass.
  ExperienceMetrics update(const Experience& exp) {
    merge_if_ready();
    cancel();
    ExperienceMetrics m = train_experience(fast_, exp);
    if (slow_enabled_) launch(exp);
    return m;
  }

  // True if a completed slow result was merged.
  bool merge_if_ready() {
    std::shared_ptr<SlowResult> ready;
    {
      std::lock_guard lock(mu_);
      ready.swap(result_);
    }
    if (!ready) return false;
    merge(*ready);
    ++merged_;
    return true;
  }

  void wait_and_merge() {
    if (worker_.joinable()) worker_.join();
    merge_if_ready();
  }

  // Stops a running slow pass and drops any unmerged result.
  void cancel() {
    if (worker_.joinable()) {
      worker_.request_stop();
      worker_.join();
    }
    std::lock_guard lock(mu_);
    if (result_) ++discarded_;
    result_.reset();
  }

  std::size_t merged_count() const { return merged_; }
  std::size_t discarded_count() const { return discarded_; }

 private:
  void launch(const Experience& exp) {
    // Snapshot: the worker owns copies of everything it reads.
    worker_ = std::jthread([this, net = fast_.net, head = fast_.head, synapses = fast_.synapses,
                            buffer = fast_.buffer, exp, cfg = slow_cfg_,
                            seed = slow_seed(exp.index)](std::stop_token stop) mutable {
      auto result = run_slow(std::move(net), std::move(head), std::move(synapses), buffer, exp, cfg, seed, stop);
      if (!result) return;
      std::lock_guard lock(mu_);
      result_ = std::move(result);
    });
  }

  // Independent of the fast-path generator so the fast path is unaffected by
  // whether slow passes run.
  std::uint64_t slow_seed(std::size_t experience) const {
    std::seed_seq seq{static_cast<std::uint32_t>(fast_.cfg.seed), static_cast<std::uint32_t>(fast_.cfg.seed >> 32),
                      0x510eu, static_cast<std::uint32_t>(experience)};
    std::uint64_t out = 0;
    std::array<std::uint32_t, 2> words{};
    seq.generate(words.begin(), words.end());
    out = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
    return out;
  }

  static std::shared_ptr<SlowResult> run_slow(LayeredNetwork net, CwrHead head, SynapticState synapses,
                                              const ReplayBuffer& fast_buffer, const Experience& exp,
                                              StrategyConfig cfg, std::uint64_t seed, std::stop_token stop) {
    net.set_cut(cfg.cut);
    for (std::size_t i = 0; i < net.num_layers(); ++i) net.set_frozen(i, false);
    Rng rng(seed);
    // Replay latents at the slow cut come from the retained raw frames.
    ReplayBuffer buffer(fast_buffer.capacity(), net.latent_shape(), fast_buffer.policy(), fast_buffer.replace_count());
    if (!fast_buffer.empty()) {
      const Tensor latents = net.extract_latent(fast_buffer.raw_batch());
      std::vector<int> labels;
      for (const auto& e : fast_buffer.entries()) labels.push_back(e.label);
      std::vector<LatentPattern> seeded = make_patterns(latents, labels, -1, nullptr);
      for (std::size_t i = 0; i < seeded.size(); ++i) {
        seeded[i].source = fast_buffer.entry(i).source;
        buffer.append(std::move(seeded[i]));
      }
    }
    if (cfg.epochs > 0) {
      // Buffer insertion belongs to the fast phase.
      cfg.buffer_capacity = buffer.size();
      const ExperienceMetrics m = train_experience(net, head, synapses, buffer, exp, cfg, rng, stop);
      if (m.cancelled) return nullptr;
    }
    if (stop.stop_requested()) return nullptr;
    auto out = std::make_shared<SlowResult>();
    for (const Tensor* p : std::as_const(net).representation_params()) {
      out->representation.push_back(*p);
      out->representation.back().drop_grad();
    }
    out->synapses = std::move(synapses);
    out->source_experience = exp.index;
    return out;
  }

  void merge(const SlowResult& r) {
    auto params = fast_.net.representation_params();
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->values() = r.representation[i].values();
    fast_.synapses = r.synapses;
    if (!fast_.buffer.empty()) fast_.buffer.replace_latents(fast_.net.extract_latent(fast_.buffer.raw_batch()));
  }

  Learner fast_;
  StrategyConfig slow_cfg_;
  bool slow_enabled_;
  std::jthread worker_;
  std::mutex mu_;
  std::shared_ptr<SlowResult> result_;
  std::size_t merged_ = 0;
  std::size_t discarded_ = 0;
};

}  // namespace edgecl
