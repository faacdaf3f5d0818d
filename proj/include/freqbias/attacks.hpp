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

// l-infinity adversarial attacks against a frozen classifier: PGD, and a
// minimum-norm search that bisects the PGD budget.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "freqbias/model.hpp"
#include "freqbias/tensor.hpp"

namespace freqbias::attacks {

struct AttackConfig {
  double epsilon = 0.01;
  int steps = 40;
  /// 0 selects epsilon / 8.
  double step_size = 0.0;
  /// Min-norm search only.
  double epsilon_max = 0.25;
  int grid_points = 8;
  double bisection_tolerance = 1e-4;
  bool random_start = false;
  std::uint64_t seed = 0;

  double effective_step_size(double eps) const { return step_size > 0.0 ? step_size : eps / 8.0; }
  void validate(bool allow_zero_epsilon = true) const;
};

struct AdversarialBatch {
  std::string attack;
  AttackConfig config;
  ImageBatch images;  ///< labels hold the adversarial prediction
  std::vector<int> original_labels;
  std::vector<int> adversarial_labels;
  std::vector<bool> success;
  std::vector<double> linf_norms;
  std::vector<std::size_t> source_ids;

  std::size_t size() const { return original_labels.size(); }
  double success_rate() const;
};

struct SampleOutcome {
  std::vector<double> adversarial;
  int prediction = -1;
  bool success = false;
  double linf_norm = 0.0;
};

/// PGD on one image with an explicit budget.
SampleOutcome pgd_sample(const model::Classifier& model, std::span<const double> x, int label,
                         double epsilon, const AttackConfig& config, std::uint64_t sample_seed);

/// `x.labels` are the labels the attack moves away from. `source_ids`, if
/// given, must match the batch length and is copied into the output.
AdversarialBatch pgd_linf(const model::Classifier& model, const ImageBatch& x,
                          const AttackConfig& config, std::size_t workers = 1,
                          std::span<const std::size_t> source_ids = {});

/// Smallest PGD budget in [0, epsilon_max] that flips the prediction: a
/// coarse grid of `grid_points` budgets, then bisection inside the first
/// successful cell down to `bisection_tolerance`.
AdversarialBatch min_norm_linf(const model::Classifier& model, const ImageBatch& x,
                               const AttackConfig& config, std::size_t workers = 1,
                               std::span<const std::size_t> source_ids = {});

double linf_distance(std::span<const double> a, std::span<const double> b);

}  // namespace freqbias::attacks
