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

#pragma once

// Command implementations behind the freqbias CLI. Each command reads a
// RunConfig, writes its artifacts into an output directory and embeds the
// full config in every artifact.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "freqbias/idcorr.hpp"

namespace freqbias::app {

/// Flat key/value configuration. Files hold `key = value` lines with `#`
/// comments; later set() calls (CLI flags) override file values.
class RunConfig {
 public:
  static RunConfig from_file(const std::filesystem::path& path);
  static RunConfig parse(const std::string& text);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::size_t> get_sizes(const std::string& key,
                                     const std::vector<std::size_t>& fallback) const;

  std::uint64_t seed() const { return get_u64("seed", 0); }
  std::size_t workers() const;

  nlohmann::json to_json() const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

struct SpiralDemoResult {
  double r2 = 0.0;
  idcorr::CorrelationReport report;
  std::filesystem::path csv_path;
  std::filesystem::path svg_path;
  std::filesystem::path json_path;
};

/// Spiral benchmark: Pearson R^2 and the shuffle test on (x, y).
SpiralDemoResult run_spiral_demo(const RunConfig& config, const std::filesystem::path& out);

struct PipelineResult {
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::size_t correctly_classified = 0;
  double attack_success_rate = 0.0;
  std::size_t ef_count = 0;
  std::size_t af_count = 0;
  std::size_t aligned_count = 0;
  double ef_preserved = 0.0;
  double af_preserved = 0.0;
  double ef_density = 0.0;
  double af_density = 0.0;
  std::optional<double> ef_density_lambda0;
  double signature_mass_ratio = 0.0;
  idcorr::CorrelationReport correlation;
  double seconds = 0.0;
};

/// gen-data -> train-model -> attack -> train-masks (EF, AF) -> align -> correlate.
PipelineResult run_pipeline(const RunConfig& config, const std::filesystem::path& out);

void cmd_gen_data(const RunConfig& config, const std::filesystem::path& out);
void cmd_train_model(const RunConfig& config, const std::filesystem::path& out);
void cmd_attack(const RunConfig& config, const std::filesystem::path& out);
void cmd_train_masks(const RunConfig& config, const std::filesystem::path& out);

struct IdResult {
  double dimension = 0.0;
  std::size_t points = 0;
  std::size_t duplicates_removed = 0;
};

/// I_d of a CSV matrix or of the flattened masks in a mask set file.
IdResult cmd_id(const RunConfig& config, const std::filesystem::path& input);

/// Correlates two inputs (mask sets, aligned by image id, or CSV matrices).
idcorr::CorrelationReport cmd_correlate(const RunConfig& config, const std::filesystem::path& a,
                                        const std::filesystem::path& b,
                                        const std::filesystem::path& out);

/// Loads either format; mask sets are detected by their magic bytes.
Matrix load_matrix(const std::filesystem::path& path);

}  // namespace freqbias::app
