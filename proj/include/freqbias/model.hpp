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

// Small dense classifier (flatten -> [dense -> ReLU]* -> dense -> softmax)
// with hand-written backpropagation and Adam.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "freqbias/tensor.hpp"

namespace freqbias::model {

class Classifier {
 public:
  Classifier() = default;
  /// Zero-initialised parameters; `hidden` may be empty (softmax regression).
  Classifier(Shape3 input, std::vector<std::size_t> hidden, std::size_t classes);

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases.
  static Classifier initialized(Shape3 input, std::vector<std::size_t> hidden,
                                std::size_t classes, std::uint64_t seed);

  const Shape3& input_shape() const { return input_; }
  std::size_t input_size() const { return input_.size(); }
  std::size_t num_classes() const { return widths_.back(); }
  /// Layer widths including input and output: {D, h..., K}.
  const std::vector<std::size_t>& widths() const { return widths_; }
  std::size_t num_layers() const { return widths_.size() - 1; }

  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + widths_[layer] * widths_[layer + 1];
  }

  std::span<const double> parameters() const { return params_; }
  /// Throws PreconditionError when frozen.
  std::span<double> mutable_parameters();

  bool frozen() const { return frozen_; }
  void freeze() { frozen_ = true; }
  void unfreeze() { frozen_ = false; }

  /// FNV-1a over layer widths and parameter bytes.
  std::uint64_t checksum() const;

 private:
  Shape3 input_{};
  std::vector<std::size_t> widths_{0};
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
  bool frozen_ = false;
};

/// Logits for n flattened inputs laid out row after row.
Matrix forward(const Classifier& model, std::span<const double> inputs, std::size_t n);
Matrix forward(const Classifier& model, const ImageBatch& batch);

/// Row-wise softmax (max-subtracted).
Matrix softmax(const Matrix& logits);

/// Mean negative log-softmax of the labelled class.
double cross_entropy(const Matrix& logits, std::span<const int> labels);

/// Argmax with ties resolved to the lowest class index.
int argmax(std::span<const double> row);
int predict(const Classifier& model, std::span<const double> image);

struct Gradients {
  double loss = 0.0;
  std::vector<double> parameters;  ///< empty unless requested
  Matrix inputs;                   ///< n x D
};

/// Exact gradients of loss_scale * cross_entropy(forward(inputs), labels).
Gradients backward(const Classifier& model, std::span<const double> inputs, std::size_t n,
                   std::span<const int> labels, double loss_scale = 1.0,
                   bool parameter_gradients = true);

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step = 0;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  AdamState(std::size_t n, double lr) : first_moment(n, 0.0), second_moment(n, 0.0), learning_rate(lr) {}
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

struct TrainConfig {
  std::size_t epochs = 40;
  std::size_t batch_size = 32;
  double learning_rate = 0.003;
  std::vector<std::size_t> hidden{64};
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainResult {
  Classifier model;  ///< frozen
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::vector<double> epoch_losses;
  std::vector<std::string> warnings;
};

TrainResult train_classifier(const ImageBatch& train, const ImageBatch& test,
                             std::size_t classes, const TrainConfig& config);

/// Fraction of argmax-correct predictions. Throws on an empty batch.
double accuracy(const Classifier& model, const ImageBatch& batch);

// Checkpoint: "FBCK", u16 version, u32 C/H/W, u32 layer-width count, u32
// widths, f64 parameters, u32 JSON length, JSON metadata. Little-endian.
inline constexpr std::uint16_t kCheckpointVersion = 1;

void save_classifier(const Classifier& model, const std::filesystem::path& path,
                     const std::string& metadata_json = "{}");
Classifier load_classifier(const std::filesystem::path& path, std::string* metadata_json = nullptr);

}  // namespace freqbias::model
