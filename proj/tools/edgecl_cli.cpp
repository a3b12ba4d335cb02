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

#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "edgecl.hpp"

namespace {

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    const auto dash = tok.find('-', 1);
    if (dash == std::string::npos) {
      out.push_back(std::stoull(tok));
      continue;
    }
    const std::uint64_t lo = std::stoull(tok.substr(0, dash)), hi = std::stoull(tok.substr(dash + 1));
    if (hi < lo) throw edgecl::ConfigError("bad seed range " + tok);
    for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
  }
  if (out.empty()) throw edgecl::ConfigError("empty seed list");
  return out;
}

struct CommonFlags {
  std::string config;
  std::string out;
  std::string seeds;
  std::vector<std::string> strategies;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("-c,--config", f.config, "JSON run config (defaults are used when omitted)");
  cmd->add_option("-o,--out", f.out, "output directory (overrides the config)");
  cmd->add_option("-s,--seeds", f.seeds, "seed list, e.g. 1,2,3 or 1-5");
  cmd->add_option("--strategy", f.strategies, "only run strategies with these labels (repeatable)");
}

edgecl::RunConfig resolve(const CommonFlags& f) {
  edgecl::RunConfig cfg = f.config.empty() ? edgecl::default_run_config() : edgecl::load_run_config(f.config);
  if (!f.out.empty()) cfg.output_dir = f.out;
  if (!f.seeds.empty()) cfg.seeds = parse_seeds(f.seeds);
  if (!f.strategies.empty()) {
    edgecl::RunConfig picked = cfg;
    picked.strategies.clear();
    picked.strategy_streams.clear();
    for (const auto& want : f.strategies) {
      bool found = false;
      for (std::size_t i = 0; i < cfg.strategies.size(); ++i) {
        if (cfg.strategies[i].label() != want) continue;
        picked.strategies.push_back(cfg.strategies[i]);
        picked.strategy_streams.push_back(i < cfg.strategy_streams.size() ? cfg.strategy_streams[i] : std::nullopt);
        found = true;
      }
      if (!found) throw edgecl::ConfigError("no strategy labelled " + want + " in the config");
    }
    cfg = picked;
  }
  cfg.validate();
  return cfg;
}

void print_summary(const edgecl::RunResult& r) {
  for (const auto& s : r.summary.at("strategies")) {
    std::cout << s.at("name").get<std::string>() << ": initial "
              << edgecl::fmt6(s.at("final_acc_initial").at("mean").get<double>()) << " new "
              << edgecl::fmt6(s.at("final_acc_new").at("mean").get<double>()) << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edgecl: on-device continual learning with latent replay"};
  app.require_subcommand(1);

  CommonFlags gen_f, run_f, prof_f, cmp_f;
  std::uint64_t gen_seed = 1;
  bool full_scale = false;
  auto* gen = app.add_subcommand("gen", "write the synthetic dataset and stream to a directory");
  gen->add_option("-c,--config", gen_f.config, "JSON run config; its stream spec is used");
  gen->add_option("-o,--out", gen_f.out, "output directory")->required();
  gen->add_option("--seed", gen_seed, "generation seed");
  gen->add_flag("--full-scale", full_scale, "use the full-size 10+5 class stream spec");

  auto* run = app.add_subcommand("run", "train every strategy over the stream and write metrics");
  add_common(run, run_f);
  std::size_t eval_every = 1;
  run->add_option("--eval-every", eval_every, "evaluate after every n experiences (0: last only)");

  auto* prof = app.add_subcommand("profile", "per-phase timing table for the pool/conv2/input variants");
  add_common(prof, prof_f);

  auto* cmp = app.add_subcommand("compare", "accuracy curves and ordering checks across strategies");
  add_common(cmp, cmp_f);

  auto* conf = app.add_subcommand("config", "print the default run config as JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*conf) {
      std::cout << nlohmann::json(edgecl::default_run_config()).dump(2) << "\n";
    } else if (*gen) {
      edgecl::StreamSpec spec;
      if (!gen_f.config.empty()) spec = edgecl::load_run_config(gen_f.config).stream;
      if (full_scale) spec = edgecl::StreamSpec::full_scale();
      spec.validate();
      const auto ds = edgecl::generate_dataset(spec, gen_seed);
      const auto data = edgecl::generate_stream(ds, spec, gen_seed);
      edgecl::export_stream(data, spec, gen_seed, gen_f.out);
      std::cout << "wrote " << data.stream.size() << " experiences to " << gen_f.out << "\n";
    } else if (*run) {
      auto cfg = resolve(run_f);
      if (run->count("--eval-every")) cfg.eval_every = eval_every;
      const auto r = edgecl::run(cfg);
      print_summary(r);
      std::cout << "metrics in " << cfg.output_dir << "\n";
    } else if (*prof) {
      auto cfg = resolve(prof_f);
      cfg.eval_every = 0;
      const auto table = edgecl::profile(cfg);
      std::cout << table.render();
    } else if (*cmp) {
      const auto cfg = resolve(cmp_f);
      const auto rep = edgecl::compare(cfg);
      for (std::size_t i = 0; i < rep.strategies.size(); ++i) {
        std::cout << rep.strategies[i] << ": initial " << edgecl::fmt6(rep.final_initial[i]) << " new "
                  << edgecl::fmt6(rep.final_new[i]) << "\n";
      }
      for (const auto& c : rep.checks) std::cout << (c.passed ? "ok    " : "VIOLATED ") << c.name << " (" << c.detail << ")\n";
      return rep.all_passed() ? 0 : 3;
    }
  } catch (const std::exception& e) {
    std::cerr << "edgecl: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
