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

// Sparse Fourier masks learned against a frozen classifier.
//
// Essential-frequency (EF) masks keep a clean image correctly classified;
// adversarial-frequency (AF) masks keep an adversarial image misclassified.
// Both minimise  CE(f(Re ifft2(M .* fft2 x)), target) + lambda * sum(M)
// with projected Adam, starting from the all-ones mask.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "freqbias/attacks.hpp"
#include "freqbias/model.hpp"
#include "freqbias/spectral.hpp"
#include "freqbias/tensor.hpp"

namespace freqbias::masks {

struct MaskTrainConfig {
  double lambda = 0.01;
  double learning_rate = 0.01;
  int min_steps = 500;
  int max_steps = 3000;
  /// Stop once the best loss has not improved by `tolerance` for `window` steps.
  int window = 50;
  double tolerance = 1e-4;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
};

struct MaskTrainResult {
  spectral::SpectralMask mask;
  double final_loss = 0.0;  ///< CE + lambda * l1 at the returned mask
  double final_cross_entropy = 0.0;
  int steps = 0;
  int final_prediction = -1;
  bool preserved = false;  ///< masked image still yields the target label
};

/// Throws PreconditionError if the classifier is not frozen or does not
/// already predict `target` for the unfiltered image.
MaskTrainResult train_mask(const model::Classifier& model, std::span<const double> image,
                           int target, const MaskTrainConfig& config);

/// Value and mask-gradient of the training objective (used by train_mask and
/// exposed for gradient checks).
std::pair<double, std::vector<double>> mask_objective(const model::Classifier& model,
                                                      const spectral::SpectralFilter& filter,
                                                      std::span<const double> mask, int target,
                                                      double lambda);

struct Sparsity {
  double l1 = 0.0;
  double density = 0.0;  ///< fraction of entries above 0.5
};

Sparsity sparsity(std::span<const double> mask);
Sparsity sparsity(std::span<const float> mask);

enum class MaskKind : std::uint8_t { kEssential = 0, kAdversarial = 1 };

std::string kind_name(MaskKind kind);

struct MaskSet {
  MaskKind kind = MaskKind::kEssential;
  Shape3 shape;
  std::vector<float> values;  ///< N x (C*H*W), row-major
  std::vector<int> target_labels;
  std::vector<int> true_labels;
  std::vector<std::uint64_t> image_ids;
  std::vector<double> final_losses;
  std::vector<double> densities;
  std::vector<std::uint8_t> preserved;
  nlohmann::json attack;  ///< null for EF
  nlohmann::json config = nlohmann::json::object();

  std::size_t size() const { return image_ids.size(); }
  std::size_t dim() const { return shape.size(); }
  std::span<const float> mask(std::size_t i) const { return {values.data() + i * dim(), dim()}; }
  double preserved_fraction() const;
  /// Rows as doubles.
  Matrix to_matrix() const;
  MaskSet select(std::span<const std::size_t> rows) const;
  void validate() const;
};

/// EF: correctly classified images of `dataset`, trained on clean pixels
/// against their true labels. Image ids are positions in `dataset`.
MaskSet train_essential_masks(const model::Classifier& model, const ImageBatch& dataset,
                              const MaskTrainConfig& config, std::size_t workers = 1);

/// AF from a finished attack: successful samples only, trained on the
/// adversarial images against the adversarial labels.
MaskSet train_adversarial_masks(const model::Classifier& model,
                                const attacks::AdversarialBatch& adversarial,
                                const ImageBatch& clean, const MaskTrainConfig& config,
                                std::size_t workers = 1);

/// Full filter chain for either kind; the AF branch attacks the correctly
/// classified images with `attack` ("pgd" or "min_norm").
MaskSet train_mask_set(const model::Classifier& model, const ImageBatch& dataset, MaskKind kind,
                       const attacks::AttackConfig& attack_config,
                       const MaskTrainConfig& mask_config, std::size_t workers = 1,
                       const std::string& attack = "pgd");

/// Restricts both sets to their common image ids, in ascending id order.
std::pair<MaskSet, MaskSet> align_mask_sets(const MaskSet& essential, const MaskSet& adversarial);

// Binary format: "FMSK", u16 version, u8 kind, u32 N/C/H/W, N*C*H*W f32
// values, then the JSON trailer (everything else) up to end of file.
inline constexpr std::uint16_t kMaskSetVersion = 1;

void save_mask_set(const MaskSet& set, const std::filesystem::path& path);
MaskSet load_mask_set(const std::filesystem::path& path);

}  // namespace freqbias::masks
