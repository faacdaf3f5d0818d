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

// Synthetic generators, CIFAR-10 ingestion and the image-batch / CSV files.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "freqbias/tensor.hpp"

namespace freqbias::data {

struct SpiralConfig {
  std::size_t n_points = 5000;
  double turns = 2.0;
  /// r = radial_rate * theta
  double radial_rate = 1.0;
  /// Gaussian noise std as a fraction of the maximum radius.
  double noise_fraction = 2e-5;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

/// Archimedean spiral with theta ~ U(0, 2*pi*turns); N x 2.
Matrix gen_spiral(const SpiralConfig& config);

/// Noise-free spiral points at the given angles.
Matrix spiral_at(std::span<const double> thetas, double radial_rate);

/// n x d i.i.d. uniform points in [0,1]^d.
Matrix gen_hypercube(std::size_t n, std::size_t d, std::uint64_t seed);

struct FrequencyBin {
  std::size_t channel = 0;
  std::size_t u = 0;  ///< row frequency
  std::size_t v = 0;  ///< column frequency
  auto operator<=>(const FrequencyBin&) const = default;
};

/// The bin plus its conjugate partner ((H-u) mod H, (W-v) mod W), sorted, unique.
std::vector<FrequencyBin> with_conjugates(std::span<const FrequencyBin> bins, const Shape3& shape);

struct SpectralDatasetConfig {
  std::size_t n_train = 500;
  std::size_t n_test = 200;
  std::size_t classes = 4;
  Shape3 shape{1, 16, 16};
  /// Per-class bins; empty selects default_signatures().
  std::vector<std::vector<FrequencyBin>> signatures;
  std::size_t bins_per_class = 2;
  double amplitude = 1.0;
  double noise_std = 4.0;
  /// Each class bin gets one random phase per dataset; images add a uniform
  /// offset of up to +-phase_jitter * pi on top (1 = fully random phase).
  double phase_jitter = 0.0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

/// Low frequencies handed out round-robin, bins_per_class per class, one
/// conjugate pair each, all in channel 0 (cycled over channels if C > 1).
std::vector<std::vector<FrequencyBin>> default_signatures(std::size_t classes,
                                                          std::size_t bins_per_class,
                                                          const Shape3& shape);

struct SpectralDataset {
  ImageBatch train;
  ImageBatch test;
  std::vector<std::vector<FrequencyBin>> signatures;  ///< with conjugates
};

/// Each image: sum over its class signature of amplitude * cos(2 pi (u x / H
/// + v y / W) + phase), plus Gaussian pixel noise, min-max scaled to
/// [0,1]. Labels cycle through the classes (exact balance up to one).
SpectralDataset gen_spectral_dataset(const SpectralDatasetConfig& config);

/// One CIFAR-10 binary batch: records of 1 label byte + 3072 pixel bytes.
ImageBatch load_cifar10(const std::filesystem::path& path);
ImageBatch parse_cifar10(std::span<const unsigned char> bytes);

// Image batch file: "FIMG", u16 version, u32 N/C/H/W, i32 labels, f64 pixels,
// u32 JSON length, JSON metadata.
inline constexpr std::uint16_t kImageBatchVersion = 1;

void save_image_batch(const ImageBatch& batch, const std::filesystem::path& path,
                      const std::string& metadata_json = "{}");
ImageBatch load_image_batch(const std::filesystem::path& path,
                            std::string* metadata_json = nullptr);

/// Numeric CSV; lines starting with '#' and a non-numeric header row are skipped.
Matrix read_csv_matrix(const std::filesystem::path& path);
void write_csv_matrix(const Matrix& m, const std::filesystem::path& path,
                      std::span<const std::string> header = {},
                      const std::string& comment = "");

}  // namespace freqbias::data
