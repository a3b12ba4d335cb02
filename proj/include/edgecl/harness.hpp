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
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "edgecl/strategy.hpp"
#include "edgecl/tensor_io.hpp"
#include "json.hpp"

namespace edgecl {

// ---- number formatting -------------------------------------------------------------

// Six significant digits, the precision of every float written to reports.
inline std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline double round6(double v) { return std::stod(fmt6(v)); }

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

// Sample standard deviation (n - 1); zero for a single value.
inline MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd r;
  if (xs.empty()) return r;
  for (double x : xs) r.mean += x;
  r.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return r;
}

// ---- configuration ---------------------------------------------------------------------

struct RunConfig {
  StreamSpec stream;
  PretrainConfig pretrain;
  std::vector<StrategyConfig> strategies;
  std::vector<std::optional<StreamSpec>> strategy_streams;  // per-strategy stream, if one was given
  std::vector<std::uint64_t> seeds{1};
  std::string output_dir = "edgecl-out";
  std::size_t eval_every = 1;  // 0: evaluate after the last experience only
  bool cache_pretrained = true;

  ArchitectureSpec arch() const {
    ArchitectureSpec a;
    a.channels = stream.channels;
    a.height = stream.image_size;
    a.width = stream.image_size;
    a.classes = stream.total_classes();
    return a;
  }

  void validate() const {
    stream.validate();
    if (seeds.empty()) throw ConfigError("run config needs at least one seed");
    if (strategies.empty()) throw ConfigError("run config needs at least one strategy");
    for (const auto& s : strategies) s.validate();
    for (const auto& s : strategy_streams) {
      if (s && !(*s == stream)) throw ConfigError("strategies disagree on the stream spec");
    }
  }
};

// The six configurations of the forgetting/plasticity comparison.
// Settings that work on the desk-scale stream (30-frame experiences, 6
// pretraining classes). A small current share per step keeps the newest class
// from swamping the head; the low below-cut rate keeps buffered latents from
// going stale while conv layers move.
inline StrategyConfig desk_recipe(StrategyConfig c = {}) {
  c.epochs = 4;
  c.current_batch = 3;
  c.replay_batch = 30;
  c.lr = 0.1f;
  c.below_cut_lr_scale = 0.005f;
  c.buffer_capacity = 180;
  return c;
}

inline std::vector<StrategyConfig> default_strategies() {
  std::vector<StrategyConfig> out;
  auto add = [&](StrategyKind kind, const char* cut) {
    StrategyConfig c = desk_recipe();
    c.kind = kind;
    c.cut = cut;
    out.push_back(c);
  };
  add(StrategyKind::ar1, "pool");
  add(StrategyKind::ar1, "conv2");
  add(StrategyKind::ar1, "input");
  add(StrategyKind::replay_balanced, "pool");
  add(StrategyKind::replay_unbalanced, "pool");
  add(StrategyKind::naive, "input");
  return out;
}

inline RunConfig default_run_config() {
  RunConfig c;
  c.strategies = default_strategies();
  c.strategy_streams.assign(c.strategies.size(), std::nullopt);
  return c;
}

inline void to_json(nlohmann::json& j, const RunConfig& c) {
  nlohmann::json strategies = nlohmann::json::array();
  for (std::size_t i = 0; i < c.strategies.size(); ++i) {
    nlohmann::json s = c.strategies[i];
    if (i < c.strategy_streams.size() && c.strategy_streams[i]) s["stream"] = *c.strategy_streams[i];
    strategies.push_back(std::move(s));
  }
  j = nlohmann::json{{"stream", c.stream},         {"pretrain", c.pretrain},
                     {"strategies", strategies},   {"seeds", c.seeds},
                     {"output_dir", c.output_dir}, {"eval_every", c.eval_every},
                     {"cache_pretrained", c.cache_pretrained}};
}

inline void from_json(const nlohmann::json& j, RunConfig& c) {
  RunConfig d = default_run_config();
  c.stream = j.contains("stream") ? j.at("stream").get<StreamSpec>() : d.stream;
  c.pretrain = j.contains("pretrain") ? j.at("pretrain").get<PretrainConfig>() : d.pretrain;
  c.strategies.clear();
  c.strategy_streams.clear();
  if (j.contains("strategies")) {
    for (const auto& s : j.at("strategies")) {
      c.strategies.push_back(s.get<StrategyConfig>());
      c.strategy_streams.push_back(s.contains("stream") ? std::optional<StreamSpec>(s.at("stream").get<StreamSpec>())
                                                        : std::nullopt);
    }
  } else {
    c.strategies = d.strategies;
    c.strategy_streams = d.strategy_streams;
  }
  c.seeds = j.value("seeds", d.seeds);
  c.output_dir = j.value("output_dir", d.output_dir);
  c.eval_every = j.value("eval_every", d.eval_every);
  c.cache_pretrained = j.value("cache_pretrained", d.cache_pretrained);
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  RunConfig c = j.get<RunConfig>();
  c.validate();
  return c;
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint32_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag};
  std::array<std::uint32_t, 2> w{};
  seq.generate(w.begin(), w.end());
  return (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
}

// ---- per-seed preparation ---------------------------------------------------------------

struct SeedContext {
  std::uint64_t seed = 0;
  StreamData data;
  LayeredNetwork pretrained;
  CwrHead head;
};

inline void ensure_writable_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir);
  const fs::path probe = fs::path(dir) / ".write-probe";
  {
    std::ofstream os(probe);
    if (!os) throw IoError("output directory " + dir + " is not writable");
  }
  fs::remove(probe, ec);
}

inline nlohmann::json pretrain_cache_key(const RunConfig& cfg, std::uint64_t seed) {
  return nlohmann::json{{"stream", cfg.stream}, {"pretrain", cfg.pretrain}, {"seed", seed}};
}

// Generates the seed's stream and pretrains (or loads the cached pretrained
// snapshot). Every strategy of the seed starts from this snapshot.
inline SeedContext prepare_seed(const RunConfig& cfg, std::uint64_t seed, const std::string& cache_dir = "") {
  SeedContext ctx;
  ctx.seed = seed;
  const SyntheticDataset ds = generate_dataset(cfg.stream, seed);
  ctx.data = generate_stream(ds, cfg.stream, seed);

  const std::string cache_path =
      cache_dir.empty() ? "" : (std::filesystem::path(cache_dir) / ("pretrained_" + std::to_string(seed) + ".json")).string();
  const nlohmann::json key = pretrain_cache_key(cfg, seed);
  if (!cache_path.empty() && std::filesystem::exists(cache_path)) {
    std::ifstream is(cache_path);
    nlohmann::json doc = nlohmann::json::parse(is, nullptr, false);
    if (!doc.is_discarded() && doc.value("key", nlohmann::json()) == key) {
      ctx.pretrained = network_from_json(doc.at("network"));
      ctx.head = CwrHead(cfg.stream.total_classes(), ctx.pretrained.feature_dim());
      ctx.head.cw = Tensor(ctx.head.cw.shape(), doc.at("cw").get<std::vector<float>>());
      ctx.head.past = doc.at("past").get<std::vector<std::uint64_t>>();
      return ctx;
    }
  }
  ctx.pretrained = LayeredNetwork::build(cfg.arch(), "pool", derive_seed(seed, 1));
  ctx.head = CwrHead(cfg.stream.total_classes(), ctx.pretrained.feature_dim());
  Rng rng(derive_seed(seed, 2));
  pretrain_model(ctx.pretrained, ctx.head, ctx.data.pretrain, cfg.pretrain, rng);
  if (!cache_path.empty()) {
    std::filesystem::create_directories(cache_dir);
    std::ofstream os(cache_path);
    os << nlohmann::json{{"key", key},
                         {"network", network_to_json(ctx.pretrained)},
                         {"cw", ctx.head.cw.values()},
                         {"past", ctx.head.past}}
              .dump();
  }
  return ctx;
}

// ---- running one strategy ------------------------------------------------------------------

struct MetricsRecord {
  std::uint64_t seed = 0;
  std::string strategy;
  std::size_t experience = 0;
  int class_id = 0;
  bool evaluated = false;
  double acc_initial = 0.0;
  double acc_new = 0.0;
  std::vector<double> per_class;
  std::size_t buffer_bytes = 0;
  double loss = 0.0;
  TimingBreakdown timing;
};

struct StrategyRun {
  std::uint64_t seed = 0;
  std::string strategy;
  double pretrain_acc_initial = 0.0;
  double pretrain_acc_new = 0.0;
  double final_acc_initial = 0.0;
  double final_acc_new = 0.0;
  std::vector<MetricsRecord> records;
  LayeredNetwork final_net;
  CwrHead final_head;
};

struct Evaluation {
  double initial = 0.0;
  double fresh = 0.0;
  std::vector<double> per_class;
};

inline Evaluation evaluate(const LayeredNetwork& net, const CwrHead& head, const LabeledSet& test,
                           std::size_t initial_classes) {
  const auto acc = per_class_accuracy(net, head, test);
  Evaluation e;
  e.initial = pooled(acc, 0, initial_classes).value();
  e.fresh = pooled(acc, initial_classes, acc.size()).value();
  for (const auto& a : acc) e.per_class.push_back(a.value());
  return e;
}

inline StrategyRun run_strategy(const RunConfig& cfg, const SeedContext& ctx, const StrategyConfig& strategy) {
  StrategyRun run;
  run.seed = ctx.seed;
  run.strategy = strategy.label();
  Learner l = make_learner(strategy, ctx.pretrained, ctx.head, ctx.data.pretrain, derive_seed(ctx.seed, 3));
  const std::size_t initial = cfg.stream.initial_classes;
  const Evaluation pre = evaluate(l.net, l.head, ctx.data.test, initial);
  run.pretrain_acc_initial = pre.initial;
  run.pretrain_acc_new = pre.fresh;
  run.final_acc_initial = pre.initial;
  run.final_acc_new = pre.fresh;
  const auto& stream = ctx.data.stream;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const ExperienceMetrics m = train_experience(l, stream[i]);
    MetricsRecord r;
    r.seed = ctx.seed;
    r.strategy = run.strategy;
    r.experience = i;
    r.class_id = stream[i].class_id;
    r.buffer_bytes = l.buffer.byte_size();
    r.loss = m.mean_loss;
    r.timing = m.timing;
    const bool last = i + 1 == stream.size();
    if (last || (cfg.eval_every > 0 && (i + 1) % cfg.eval_every == 0)) {
      const Evaluation e = evaluate(l.net, l.head, ctx.data.test, initial);
      r.evaluated = true;
      r.acc_initial = e.initial;
      r.acc_new = e.fresh;
      r.per_class = e.per_class;
      if (last) {
        run.final_acc_initial = e.initial;
        run.final_acc_new = e.fresh;
      }
    }
    run.records.push_back(std::move(r));
  }
  run.final_net = std::move(l.net);
  run.final_head = std::move(l.head);
  return run;
}

// ---- reports -----------------------------------------------------------------------------------

// metrics.csv column order. Timing columns come last so determinism checks
// can strip them.
inline std::vector<std::string> metrics_columns(std::size_t classes) {
  std::vector<std::string> cols{"seed", "strategy", "experience", "class_id", "acc_initial", "acc_new", "loss",
                                "buffer_bytes"};
  for (std::size_t j = 0; j < classes; ++j) cols.push_back("acc_class_" + std::to_string(j));
  for (const char* t : {"feature_extraction_s", "forward_s", "backward_s", "weights_update_s", "overall_s"})
    cols.emplace_back(t);
  return cols;
}

inline constexpr std::size_t kTimingColumns = 5;

inline void write_metrics_csv(std::ostream& os, const std::vector<StrategyRun>& runs, std::size_t classes) {
  const auto cols = metrics_columns(classes);
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << "\n";
  for (const auto& run : runs) {
    for (const auto& r : run.records) {
      os << r.seed << "," << r.strategy << "," << r.experience << "," << r.class_id << ",";
      os << (r.evaluated ? fmt6(r.acc_initial) : "") << "," << (r.evaluated ? fmt6(r.acc_new) : "") << ","
         << fmt6(r.loss) << "," << r.buffer_bytes;
      for (std::size_t j = 0; j < classes; ++j) os << "," << (r.evaluated ? fmt6(r.per_class.at(j)) : "");
      os << "," << fmt6(r.timing.feature_extraction) << "," << fmt6(r.timing.forward) << ","
         << fmt6(r.timing.backward) << "," << fmt6(r.timing.weights_update) << "," << fmt6(r.timing.overall())
         << "\n";
    }
  }
}

// Timing totals are sums of the per-experience values as printed in the CSV,
// so the summary can be recomputed from metrics.csv exactly.
struct RunTotals {
  double feature_extraction = 0.0, forward = 0.0, backward = 0.0, weights_update = 0.0, overall = 0.0;
};

inline RunTotals csv_totals(const StrategyRun& run) {
  RunTotals t;
  for (const auto& r : run.records) {
    t.feature_extraction += round6(r.timing.feature_extraction);
    t.forward += round6(r.timing.forward);
    t.backward += round6(r.timing.backward);
    t.weights_update += round6(r.timing.weights_update);
    t.overall += round6(r.timing.overall());
  }
  return t;
}

inline nlohmann::json stat_json(const std::vector<double>& xs) {
  const MeanStd ms = mean_std(xs);
  return nlohmann::json{{"mean", round6(ms.mean)}, {"std", round6(ms.std)}, {"per_seed", xs}};
}

// Mean and std over seeds of final accuracies and total per-phase times.
inline nlohmann::json make_summary(const RunConfig& cfg, const std::vector<StrategyRun>& runs) {
  nlohmann::json strategies = nlohmann::json::array();
  for (const auto& s : cfg.strategies) {
    std::vector<double> fi, fn, pi, fe, fw, bw, wu, ov;
    for (const auto& run : runs) {
      if (run.strategy != s.label()) continue;
      fi.push_back(round6(run.final_acc_initial));
      fn.push_back(round6(run.final_acc_new));
      pi.push_back(round6(run.pretrain_acc_initial));
      const RunTotals t = csv_totals(run);
      fe.push_back(t.feature_extraction);
      fw.push_back(t.forward);
      bw.push_back(t.backward);
      wu.push_back(t.weights_update);
      ov.push_back(t.overall);
    }
    strategies.push_back({{"name", s.label()},
                          {"final_acc_initial", stat_json(fi)},
                          {"final_acc_new", stat_json(fn)},
                          {"pretrain_acc_initial", stat_json(pi)},
                          {"total_time_s",
                           {{"feature_extraction", stat_json(fe)},
                            {"forward", stat_json(fw)},
                            {"backward", stat_json(bw)},
                            {"weights_update", stat_json(wu)},
                            {"overall", stat_json(ov)}}}});
  }
  return nlohmann::json{{"format", "edgecl.summary"},
                        {"version", 1},
                        {"seeds", cfg.seeds},
                        {"stream_length", cfg.stream.stream_length()},
                        {"strategies", strategies}};
}

// Table-shaped timing report: one column per strategy, mean over seeds of the
// per-experience phase times, plus final accuracies.
struct TimingTable {
  std::vector<std::string> variants;
  std::vector<std::string> cuts;
  std::vector<double> acc_initial, acc_new;
  std::vector<double> feature_extraction, forward, backward, weights_update, overall;

  std::size_t index_of(const std::string& variant) const {
    for (std::size_t i = 0; i < variants.size(); ++i)
      if (variants[i] == variant) return i;
    throw ArgumentError("no variant " + variant + " in timing table");
  }

  void write_csv(std::ostream& os) const {
    os << "row";
    for (const auto& v : variants) os << "," << v;
    os << "\n";
    auto line = [&](const char* name, const std::vector<double>& xs) {
      os << name;
      for (double x : xs) os << "," << fmt6(x);
      os << "\n";
    };
    line("final_acc_initial", acc_initial);
    line("final_acc_new", acc_new);
    line("feature_extraction_s", feature_extraction);
    line("forward_s", forward);
    line("backward_s", backward);
    line("weights_update_s", weights_update);
    line("overall_s", overall);
  }

  std::string render() const {
    std::ostringstream os;
    char buf[128];
    auto row = [&](const std::string& label, auto cell) {
      std::snprintf(buf, sizeof buf, "%-28s", label.c_str());
      os << buf;
      for (std::size_t i = 0; i < variants.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%14s", cell(i).c_str());
        os << buf;
      }
      os << "\n";
    };
    row("Variant", [&](std::size_t i) { return variants[i]; });
    row("Final accuracy", [&](std::size_t) { return std::string(); });
    row("  Initial categories", [&](std::size_t i) { return fmt6(100.0 * acc_initial[i]) + "%"; });
    row("  New categories", [&](std::size_t i) { return fmt6(100.0 * acc_new[i]) + "%"; });
    row("Time per experience (s)", [&](std::size_t) { return std::string(); });
    row("  Feature extraction",
        [&](std::size_t i) { return cuts[i] == "input" ? std::string("-") : fmt6(feature_extraction[i]); });
    row("  Forward pass", [&](std::size_t i) { return fmt6(forward[i]); });
    row("  Backward pass", [&](std::size_t i) { return fmt6(backward[i]); });
    row("  Weights update", [&](std::size_t i) { return fmt6(weights_update[i]); });
    row("  Overall", [&](std::size_t i) { return fmt6(overall[i]); });
    return os.str();
  }
};

inline TimingTable make_timing_table(const RunConfig& cfg, const std::vector<StrategyRun>& runs) {
  TimingTable t;
  for (const auto& s : cfg.strategies) {
    std::vector<double> ai, an, fe, fw, bw, wu, ov;
    for (const auto& run : runs) {
      if (run.strategy != s.label()) continue;
      ai.push_back(run.final_acc_initial);
      an.push_back(run.final_acc_new);
      TimingBreakdown sum;
      for (const auto& r : run.records) sum += r.timing;
      const double n = run.records.empty() ? 1.0 : static_cast<double>(run.records.size());
      fe.push_back(sum.feature_extraction / n);
      fw.push_back(sum.forward / n);
      bw.push_back(sum.backward / n);
      wu.push_back(sum.weights_update / n);
      ov.push_back(sum.overall() / n);
    }
    t.variants.push_back(s.label());
    t.cuts.push_back(s.cut);
    t.acc_initial.push_back(mean_std(ai).mean);
    t.acc_new.push_back(mean_std(an).mean);
    t.feature_extraction.push_back(mean_std(fe).mean);
    t.forward.push_back(mean_std(fw).mean);
    t.backward.push_back(mean_std(bw).mean);
    t.weights_update.push_back(mean_std(wu).mean);
    t.overall.push_back(mean_std(ov).mean);
  }
  return t;
}

struct RunResult {
  std::vector<StrategyRun> runs;  // seed-major, strategies in config order
  nlohmann::json summary;
  TimingTable timing;
};

// Every seed x strategy over the whole stream; writes metrics.csv,
// summary.json and timing.csv into cfg.output_dir.
inline RunResult run(const RunConfig& cfg) {
  cfg.validate();
  ensure_writable_dir(cfg.output_dir);
  const std::string cache_dir =
      cfg.cache_pretrained ? (std::filesystem::path(cfg.output_dir) / "cache").string() : std::string();
  RunResult result;
  for (std::uint64_t seed : cfg.seeds) {
    const SeedContext ctx = prepare_seed(cfg, seed, cache_dir);
    for (const auto& s : cfg.strategies) result.runs.push_back(run_strategy(cfg, ctx, s));
  }
  result.summary = make_summary(cfg, result.runs);
  result.timing = make_timing_table(cfg, result.runs);
  const std::filesystem::path dir(cfg.output_dir);
  {
    std::ofstream os(dir / "metrics.csv");
    write_metrics_csv(os, result.runs, cfg.stream.total_classes());
  }
  {
    std::ofstream os(dir / "summary.json");
    os << result.summary.dump(2) << "\n";
  }
  {
    std::ofstream os(dir / "timing.csv");
    result.timing.write_csv(os);
  }
  return result;
}

// Runs one strategy per cut variant and returns the timing table.
inline TimingTable profile(const RunConfig& cfg) {
  std::set<std::string> cuts;
  for (const auto& s : cfg.strategies) cuts.insert(s.cut);
  for (const char* needed : {"pool", "conv2", "input"}) {
    if (!cuts.count(needed)) throw ConfigError(std::string("profile needs a strategy with cut '") + needed + "'");
  }
  return run(cfg).timing;
}

// ---- comparison -------------------------------------------------------------------------------

struct OrderingCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct CompareReport {
  std::vector<std::string> strategies;
  std::vector<double> final_initial, final_new;  // mean over seeds
  std::vector<std::vector<double>> curve_initial, curve_new;  // [strategy][experience], mean over seeds
  std::vector<OrderingCheck> checks;

  double initial_of(const std::string& s) const { return final_initial.at(index_of(s)); }
  double new_of(const std::string& s) const { return final_new.at(index_of(s)); }
  bool has(const std::string& s) const {
    return std::find(strategies.begin(), strategies.end(), s) != strategies.end();
  }
  std::size_t index_of(const std::string& s) const {
    auto it = std::find(strategies.begin(), strategies.end(), s);
    if (it == strategies.end()) throw ArgumentError("strategy " + s + " not in comparison");
    return static_cast<std::size_t>(it - strategies.begin());
  }
  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
  }
};

// Expected final-accuracy ordering among the default strategy labels. Checks
// whose strategies are absent are skipped.
inline std::vector<OrderingCheck> ordering_checks(const CompareReport& r, std::size_t total_classes) {
  std::vector<OrderingCheck> out;
  auto have = [&](std::initializer_list<const char*> names) {
    for (const char* n : names)
      if (!r.has(n)) return false;
    return true;
  };
  auto cmp = [&](const std::string& name, double a, double b, double margin, bool strict) {
    const bool ok = strict ? a > b + margin : a >= b + margin;
    out.push_back({name, ok, fmt6(a) + (strict ? " > " : " >= ") + fmt6(b) + (margin != 0.0 ? " + " + fmt6(margin) : "")});
  };
  if (have({"ar1-pool", "replay-balanced-pool"}))
    cmp("initial: ar1-pool >= replay-balanced-pool", r.initial_of("ar1-pool"), r.initial_of("replay-balanced-pool"), 0, false);
  if (have({"replay-balanced-pool", "replay-unbalanced-pool"}))
    cmp("initial: replay-balanced-pool > replay-unbalanced-pool", r.initial_of("replay-balanced-pool"),
        r.initial_of("replay-unbalanced-pool"), 0, true);
  if (have({"replay-unbalanced-pool", "naive-input"}))
    cmp("initial: replay-unbalanced-pool > naive-input", r.initial_of("replay-unbalanced-pool"),
        r.initial_of("naive-input"), 0, true);
  if (have({"ar1-pool", "naive-input"}))
    cmp("initial: ar1-pool >= naive-input + 0.15", r.initial_of("ar1-pool"), r.initial_of("naive-input"), 0.15, false);
  if (have({"ar1-input", "ar1-conv2"}))
    cmp("new: ar1-input >= ar1-conv2", r.new_of("ar1-input"), r.new_of("ar1-conv2"), 0, false);
  if (have({"ar1-conv2", "ar1-pool"}))
    cmp("new: ar1-conv2 >= ar1-pool", r.new_of("ar1-conv2"), r.new_of("ar1-pool"), 0, false);
  if (have({"ar1-pool", "replay-balanced-pool"}))
    cmp("new: ar1-pool >= replay-balanced-pool", r.new_of("ar1-pool"), r.new_of("replay-balanced-pool"), 0, false);
  if (have({"replay-unbalanced-pool"})) {
    const double chance = 1.0 / static_cast<double>(total_classes);
    cmp("initial: replay-unbalanced-pool >= chance + 0.20", r.initial_of("replay-unbalanced-pool"), chance, 0.20,
        false);
  }
  return out;
}

inline CompareReport make_compare_report(const RunConfig& cfg, const std::vector<StrategyRun>& runs) {
  CompareReport rep;
  const std::size_t length = cfg.stream.stream_length();
  for (const auto& s : cfg.strategies) {
    std::vector<double> fi, fn;
    std::vector<double> ci(length, 0.0), cn(length, 0.0);
    std::vector<std::size_t> n(length, 0);
    for (const auto& run : runs) {
      if (run.strategy != s.label()) continue;
      fi.push_back(run.final_acc_initial);
      fn.push_back(run.final_acc_new);
      for (const auto& r : run.records) {
        if (!r.evaluated) continue;
        ci[r.experience] += r.acc_initial;
        cn[r.experience] += r.acc_new;
        ++n[r.experience];
      }
    }
    for (std::size_t e = 0; e < length; ++e) {
      if (n[e] == 0) {
        ci[e] = cn[e] = std::nan("");
        continue;
      }
      ci[e] /= static_cast<double>(n[e]);
      cn[e] /= static_cast<double>(n[e]);
    }
    rep.strategies.push_back(s.label());
    rep.final_initial.push_back(mean_std(fi).mean);
    rep.final_new.push_back(mean_std(fn).mean);
    rep.curve_initial.push_back(std::move(ci));
    rep.curve_new.push_back(std::move(cn));
  }
  rep.checks = ordering_checks(rep, cfg.stream.total_classes());
  return rep;
}

// Runs all strategies on the same stream and writes the aligned curves
// (compare.csv) and final table plus ordering checks (compare.json) next to
// the run artifacts.
inline CompareReport compare(const RunConfig& cfg) {
  if (cfg.strategies.size() < 2) throw ConfigError("compare needs at least two strategies");
  cfg.validate();
  const RunResult result = run(cfg);
  CompareReport rep = make_compare_report(cfg, result.runs);
  const std::filesystem::path dir(cfg.output_dir);
  {
    std::ofstream os(dir / "compare.csv");
    os << "experience";
    for (const auto& s : rep.strategies) os << "," << s << ":acc_initial," << s << ":acc_new";
    os << "\n";
    for (std::size_t e = 0; e < cfg.stream.stream_length(); ++e) {
      os << e;
      for (std::size_t i = 0; i < rep.strategies.size(); ++i) {
        auto cell = [](double v) { return std::isnan(v) ? std::string() : fmt6(v); };
        os << "," << cell(rep.curve_initial[i][e]) << "," << cell(rep.curve_new[i][e]);
      }
      os << "\n";
    }
  }
  {
    nlohmann::json finals = nlohmann::json::array();
    for (std::size_t i = 0; i < rep.strategies.size(); ++i) {
      finals.push_back({{"strategy", rep.strategies[i]},
                        {"final_acc_initial", round6(rep.final_initial[i])},
                        {"final_acc_new", round6(rep.final_new[i])}});
    }
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : rep.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    std::ofstream os(dir / "compare.json");
    os << nlohmann::json{{"finals", finals}, {"checks", checks}}.dump(2) << "\n";
  }
  return rep;
}

// ---- stream export ------------------------------------------------------------------------------

// Directory layout:
//   spec.json                  stream spec + seed
//   pretrain.bin, test.bin     tensor files ([n, c, h, w])
//   sets.json                  labels and frame ids of pretrain/test
//   stream.json                experience list (index, class, object, session, file, frame ids)
//   experiences/exp_NNNN.bin   one tensor file per experience
inline void export_stream(const StreamData& data, const StreamSpec& spec, std::uint64_t seed, const std::string& dir) {
  namespace fs = std::filesystem;
  ensure_writable_dir(dir);
  fs::create_directories(fs::path(dir) / "experiences");
  nlohmann::json spec_doc = spec;
  spec_doc["seed"] = seed;
  std::ofstream(fs::path(dir) / "spec.json") << spec_doc.dump(2) << "\n";
  io::save_tensor((fs::path(dir) / "pretrain.bin").string(), data.pretrain.frames);
  io::save_tensor((fs::path(dir) / "test.bin").string(), data.test.frames);
  std::ofstream(fs::path(dir) / "sets.json")
      << nlohmann::json{{"pretrain", {{"labels", data.pretrain.labels}, {"frame_ids", data.pretrain.frame_ids}}},
                        {"test", {{"labels", data.test.labels}, {"frame_ids", data.test.frame_ids}}}}
             .dump()
      << "\n";
  nlohmann::json stream = nlohmann::json::array();
  for (const auto& e : data.stream) {
    char name[32];
    std::snprintf(name, sizeof name, "exp_%04zu.bin", e.index);
    io::save_tensor((fs::path(dir) / "experiences" / name).string(), e.frames);
    stream.push_back({{"index", e.index},
                      {"class_id", e.class_id},
                      {"object_id", e.object_id},
                      {"session_id", e.session_id},
                      {"file", std::string("experiences/") + name},
                      {"frame_ids", e.frame_ids}});
  }
  std::ofstream(fs::path(dir) / "stream.json") << stream.dump(2) << "\n";
}

}  // namespace edgecl
