// Copyright 2026 The freqbias Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "freqbias/app.hpp"
#include "freqbias/error.hpp"

namespace {

namespace fs = std::filesystem;
using freqbias::app::RunConfig;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Options shared by every subcommand. Values given on the command line
// override the config file.
struct Common {
  std::string config_file;
  std::string out = "out";
  std::vector<std::string> sets;
  std::optional<std::string> seed;
  std::optional<std::string> workers;
  std::optional<std::string> lambda;
  std::optional<std::string> epsilon;
  std::optional<std::string> shuffles;
  std::optional<std::string> discard;
  std::optional<std::string> data;
  std::optional<std::string> model;
  std::optional<std::string> adversarial;
  std::optional<std::string> kind;
  std::optional<std::string> attack;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_file, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--set", c.sets, "override a config key (key=value), repeatable");
  cmd->add_option("--seed", c.seed, "global seed");
  cmd->add_option("--workers", c.workers, "worker threads (0 = all cores)");
  cmd->add_option("--lambda", c.lambda, "mask l1 weight");
  cmd->add_option("--epsilon", c.epsilon, "attack budget (l-inf)");
  cmd->add_option("--shuffles", c.shuffles, "number of shuffles in the null");
  cmd->add_option("--discard", c.discard, "fraction of largest ratios discarded by TwoNN");
}

RunConfig build_config(const Common& c) {
  RunConfig cfg = c.config_file.empty() ? RunConfig{} : RunConfig::from_file(c.config_file);
  for (const auto& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw freqbias::InvalidArgument("--set expects key=value, got '" + kv + "'");
    }
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  const std::pair<const char*, const std::optional<std::string>*> flags[] = {
      {"seed", &c.seed},         {"workers", &c.workers},
      {"lambda", &c.lambda},     {"epsilon", &c.epsilon},
      {"shuffles", &c.shuffles}, {"discard", &c.discard},
      {"data", &c.data},         {"model", &c.model},
      {"adversarial", &c.adversarial}, {"kind", &c.kind},
      {"attack", &c.attack}};
  for (const auto& [key, value] : flags) {
    if (*value) cfg.set(key, **value);
  }
  return cfg;
}

void print_report(const freqbias::idcorr::CorrelationReport& r) {
  std::printf("I_d %.6g  shuffled %.6g +- %.6g  Z %.6g  P %.6g  (N=%zu)\n", r.id_observed,
              r.shuffled_mean, r.shuffled_std, r.z_score, r.p_value, r.points);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frequency-mask and intrinsic-dimension correlation toolkit"};
  app.require_subcommand(1);
  Common c;

  auto* gen = app.add_subcommand("gen-data", "generate the synthetic spectral dataset");
  add_common(gen, c);

  auto* train = app.add_subcommand("train-model", "train the classifier");
  add_common(train, c);
  train->add_option("--data", c.data, "dataset directory from gen-data")->required();

  auto* attack = app.add_subcommand("attack", "attack the correctly classified test images");
  add_common(attack, c);
  attack->add_option("--data", c.data, "dataset directory")->required();
  attack->add_option("--model", c.model, "checkpoint file")->required();
  attack->add_option("--attack", c.attack, "pgd or min_norm");

  auto* masks = app.add_subcommand("train-masks", "train EF or AF masks");
  add_common(masks, c);
  masks->add_option("--data", c.data, "dataset directory")->required();
  masks->add_option("--model", c.model, "checkpoint file")->required();
  masks->add_option("--kind", c.kind, "ef or af");
  masks->add_option("--adversarial", c.adversarial, "adversarial.fimg from the attack command");
  masks->add_option("--attack", c.attack, "attack for AF masks without --adversarial");

  std::string id_input;
  auto* id = app.add_subcommand("id", "estimate the intrinsic dimension of a matrix");
  add_common(id, c);
  id->add_option("input", id_input, "CSV matrix or mask set")->required();

  std::string corr_a;
  std::string corr_b;
  auto* corr = app.add_subcommand("correlate", "shuffle test between two representations");
  add_common(corr, c);
  corr->add_option("a", corr_a, "first CSV matrix or mask set")->required();
  corr->add_option("b", corr_b, "second CSV matrix or mask set")->required();

  auto* spiral = app.add_subcommand("spiral-demo", "correlation benchmark on a 2-D spiral");
  add_common(spiral, c);

  auto* pipeline = app.add_subcommand("pipeline", "run every stage end to end");
  add_common(pipeline, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    const RunConfig cfg = build_config(c);
    const fs::path out = c.out;
    if (*gen) {
      freqbias::app::cmd_gen_data(cfg, out);
    } else if (*train) {
      freqbias::app::cmd_train_model(cfg, out);
    } else if (*attack) {
      freqbias::app::cmd_attack(cfg, out);
    } else if (*masks) {
      freqbias::app::cmd_train_masks(cfg, out);
    } else if (*id) {
      const auto r = freqbias::app::cmd_id(cfg, id_input);
      std::printf("I_d %.6g  points %zu  duplicates_removed %zu\n", r.dimension, r.points,
                  r.duplicates_removed);
    } else if (*corr) {
      print_report(freqbias::app::cmd_correlate(cfg, corr_a, corr_b, out));
    } else if (*spiral) {
      const auto r = freqbias::app::run_spiral_demo(cfg, out);
      std::printf("R2 %.6g  ", r.r2);
      print_report(r.report);
    } else if (*pipeline) {
      const auto r = freqbias::app::run_pipeline(cfg, out);
      std::printf("test accuracy %.4f  attack success %.4f  EF %zu (preserved %.4f)  "
                  "AF %zu (preserved %.4f)  aligned %zu  %.1fs\n",
                  r.test_accuracy, r.attack_success_rate, r.ef_count, r.ef_preserved, r.af_count,
                  r.af_preserved, r.aligned_count, r.seconds);
      print_report(r.correlation);
    }
  } catch (const freqbias::InvalidArgument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return 0;
}
