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

#include "freqbias/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>

#include "freqbias/binary_io.hpp"
#include "freqbias/error.hpp"
#include "freqbias/simd/kernels.hpp"

namespace freqbias::model {
namespace {

// Per-sample forward pass keeping every pre-activation for backprop.
struct Trace {
  std::vector<std::vector<double>> activations;  // a_0 = x, a_l = relu(z_l)
  std::vector<double> logits;
};

Trace run_forward(const Classifier& model, std::span<const double> x) {
  const auto& widths = model.widths();
  const auto params = model.parameters();
  Trace trace;
  trace.activations.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    const std::size_t in = widths[l];
    const std::size_t out = widths[l + 1];
    const double* w = params.data() + model.weight_offset(l);
    const double* b = params.data() + model.bias_offset(l);
    const std::vector<double>& a = trace.activations.back();
    std::vector<double> z(out);
    for (std::size_t j = 0; j < out; ++j) {
      z[j] = simd::dot({w + j * in, in}, a) + b[j];
    }
    if (l + 1 == model.num_layers()) {
      trace.logits = std::move(z);
    } else {
      for (double& v : z) v = std::max(v, 0.0);
      trace.activations.push_back(std::move(z));
    }
  }
  return trace;
}

void check_inputs(const Classifier& model, std::span<const double> inputs, std::size_t n) {
  if (inputs.size() != n * model.input_size()) {
    throw ShapeError("classifier expects inputs of size " + std::to_string(model.input_size()) +
                     ", got " + std::to_string(inputs.size()) + " values for " +
                     std::to_string(n) + " samples");
  }
}

double log_sum_exp(std::span<const double> row) {
  const double top = *std::max_element(row.begin(), row.end());
  double sum = 0.0;
  for (double v : row) sum += std::exp(v - top);
  return top + std::log(sum);
}

}  // namespace

Classifier::Classifier(Shape3 input, std::vector<std::size_t> hidden, std::size_t classes)
    : input_(input) {
  if (input.size() == 0) throw InvalidArgument("classifier input shape is empty");
  if (classes < 2) throw InvalidArgument("classifier needs at least two classes");
  widths_.clear();
  widths_.push_back(input.size());
  for (std::size_t h : hidden) {
    if (h == 0) throw InvalidArgument("hidden layer width must be positive");
    widths_.push_back(h);
  }
  widths_.push_back(classes);
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    offsets_.push_back(total);
    total += widths_[l] * widths_[l + 1] + widths_[l + 1];
  }
  params_.assign(total, 0.0);
}

Classifier Classifier::initialized(Shape3 input, std::vector<std::size_t> hidden,
                                   std::size_t classes, std::uint64_t seed) {
  Classifier model(input, std::move(hidden), classes);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(model.widths_[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    const std::size_t end = model.bias_offset(l) + model.widths_[l + 1];
    for (std::size_t i = model.weight_offset(l); i < end; ++i) model.params_[i] = dist(rng);
  }
  return model;
}

std::span<double> Classifier::mutable_parameters() {
  if (frozen_) throw PreconditionError("classifier is frozen");
  return params_;
}

std::uint64_t Classifier::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t word) {
    for (int i = 0; i < 8; ++i) {
      h ^= (word >> (8 * i)) & 0xFF;
      h *= 0x100000001b3ULL;
    }
  };
  for (std::size_t w : widths_) mix(w);
  for (double p : params_) mix(std::bit_cast<std::uint64_t>(p));
  return h;
}

Matrix forward(const Classifier& model, std::span<const double> inputs, std::size_t n) {
  check_inputs(model, inputs, n);
  const std::size_t d = model.input_size();
  Matrix logits(n, model.num_classes());
  for (std::size_t i = 0; i < n; ++i) {
    const Trace t = run_forward(model, inputs.subspan(i * d, d));
    std::copy(t.logits.begin(), t.logits.end(), logits.row(i).begin());
  }
  return logits;
}

Matrix forward(const Classifier& model, const ImageBatch& batch) {
  batch.validate();
  if (batch.shape != model.input_shape()) {
    throw ShapeError("batch shape " + batch.shape.str() + " does not match classifier input " +
                     model.input_shape().str());
  }
  return forward(model, batch.pixels, batch.size());
}

Matrix softmax(const Matrix& logits) {
  Matrix out(logits.rows, logits.cols);
  for (std::size_t i = 0; i < logits.rows; ++i) {
    const auto row = logits.row(i);
    const double top = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    auto dst = out.row(i);
    for (std::size_t k = 0; k < row.size(); ++k) {
      dst[k] = std::exp(row[k] - top);
      sum += dst[k];
    }
    for (double& v : dst) v /= sum;
  }
  return out;
}

double cross_entropy(const Matrix& logits, std::span<const int> labels) {
  if (labels.size() != logits.rows) throw ShapeError("label count does not match logits rows");
  if (logits.rows == 0) throw InvalidArgument("cross entropy of an empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < logits.rows; ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= logits.cols) {
      throw InvalidArgument("label " + std::to_string(y) + " outside [0, " +
                            std::to_string(logits.cols) + ")");
    }
    const auto row = logits.row(i);
    total += log_sum_exp(row) - row[static_cast<std::size_t>(y)];
  }
  return total / static_cast<double>(logits.rows);
}

int argmax(std::span<const double> row) {
  return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
}

int predict(const Classifier& model, std::span<const double> image) {
  check_inputs(model, image, 1);
  return argmax(run_forward(model, image).logits);
}

Gradients backward(const Classifier& model, std::span<const double> inputs, std::size_t n,
                   std::span<const int> labels, double loss_scale, bool parameter_gradients) {
  check_inputs(model, inputs, n);
  if (labels.size() != n) throw ShapeError("label count does not match sample count");
  if (n == 0) throw InvalidArgument("backward on an empty batch");
  const auto& widths = model.widths();
  const auto params = model.parameters();
  const std::size_t d = model.input_size();
  const std::size_t k_classes = model.num_classes();
  const double inv_n = 1.0 / static_cast<double>(n);

  Gradients g;
  g.inputs = Matrix(n, d);
  if (parameter_gradients) g.parameters.assign(params.size(), 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= k_classes) {
      throw InvalidArgument("label " + std::to_string(y) + " outside [0, " +
                            std::to_string(k_classes) + ")");
    }
    const Trace t = run_forward(model, inputs.subspan(i * d, d));
    const double lse = log_sum_exp(t.logits);
    g.loss += (lse - t.logits[static_cast<std::size_t>(y)]) * inv_n;

    std::vector<double> delta(k_classes);
    for (std::size_t k = 0; k < k_classes; ++k) {
      delta[k] = std::exp(t.logits[k] - lse);
    }
    delta[static_cast<std::size_t>(y)] -= 1.0;
    for (double& v : delta) v *= loss_scale * inv_n;

    for (std::size_t l = model.num_layers(); l-- > 0;) {
      const std::size_t in = widths[l];
      const std::size_t out = widths[l + 1];
      const double* w = params.data() + model.weight_offset(l);
      const std::vector<double>& a = t.activations[l];
      if (parameter_gradients) {
        double* gw = g.parameters.data() + model.weight_offset(l);
        double* gb = g.parameters.data() + model.bias_offset(l);
        for (std::size_t j = 0; j < out; ++j) {
          if (delta[j] == 0.0) continue;
          simd::axpy(delta[j], a, {gw + j * in, in});
          gb[j] += delta[j];
        }
      }
      std::vector<double> prev(in, 0.0);
      for (std::size_t j = 0; j < out; ++j) {
        if (delta[j] == 0.0) continue;
        simd::axpy(delta[j], {w + j * in, in}, prev);
      }
      if (l > 0) {
        // ReLU derivative: the stored activation is positive iff z > 0.
        for (std::size_t q = 0; q < in; ++q) {
          if (a[q] <= 0.0) prev[q] = 0.0;
        }
      }
      delta = std::move(prev);
    }
    std::copy(delta.begin(), delta.end(), g.inputs.row(i).begin());
  }
  g.loss *= loss_scale;
  return g;
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw ShapeError("adam: parameter, gradient and moment sizes differ");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g * g;
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw InvalidArgument("batch size must be positive");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
}

double accuracy(const Classifier& model, const ImageBatch& batch) {
  if (batch.empty()) throw InvalidArgument("accuracy of an empty dataset");
  const Matrix logits = forward(model, batch);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (argmax(logits.row(i)) == batch.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(batch.size());
}

TrainResult train_classifier(const ImageBatch& train, const ImageBatch& test,
                             std::size_t classes, const TrainConfig& config) {
  config.validate();
  train.validate();
  if (train.empty()) throw InvalidArgument("training set is empty");
  for (int y : train.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw InvalidArgument("training label " + std::to_string(y) + " outside [0, " +
                            std::to_string(classes) + ")");
    }
  }
  TrainResult result;
  if (std::adjacent_find(train.labels.begin(), train.labels.end(), std::not_equal_to<>()) ==
      train.labels.end()) {
    result.warnings.push_back("training set contains a single class");
  }

  Classifier model = Classifier::initialized(train.shape, config.hidden, classes, config.seed);
  AdamState adam(model.parameters().size(), config.learning_rate);
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> inputs;
  std::vector<int> labels;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      inputs.clear();
      labels.clear();
      for (std::size_t q = start; q < stop; ++q) {
        const auto img = train.image(order[q]);
        inputs.insert(inputs.end(), img.begin(), img.end());
        labels.push_back(train.labels[order[q]]);
      }
      const Gradients g = backward(model, inputs, labels.size(), labels);
      adam_step(adam, model.mutable_parameters(), g.parameters);
      epoch_loss += g.loss * static_cast<double>(labels.size());
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(train.size()));
  }
  model.freeze();
  result.train_accuracy = accuracy(model, train);
  result.test_accuracy = test.empty() ? 0.0 : accuracy(model, test);
  result.model = std::move(model);
  return result;
}

void save_classifier(const Classifier& model, const std::filesystem::path& path,
                     const std::string& metadata_json) {
  io::ByteWriter w;
  w.bytes("FBCK");
  w.u16(kCheckpointVersion);
  const Shape3& s = model.input_shape();
  w.u32(static_cast<std::uint32_t>(s.channels));
  w.u32(static_cast<std::uint32_t>(s.height));
  w.u32(static_cast<std::uint32_t>(s.width));
  w.u32(static_cast<std::uint32_t>(model.widths().size()));
  for (std::size_t width : model.widths()) w.u32(static_cast<std::uint32_t>(width));
  for (double p : model.parameters()) w.f64(p);
  w.u32(static_cast<std::uint32_t>(metadata_json.size()));
  w.bytes(metadata_json);
  w.save(path);
}

Classifier load_classifier(const std::filesystem::path& path, std::string* metadata_json) {
  io::ByteReader r = io::ByteReader::from_file(path);
  r.require(4, "magic");
  if (r.bytes(4) != "FBCK") throw BadMagicError("not a classifier checkpoint", 0);
  const std::uint64_t version_at = r.offset();
  const std::uint16_t version = r.u16();
  if (version != kCheckpointVersion) {
    throw VersionError("unsupported checkpoint version " + std::to_string(version), version_at);
  }
  Shape3 shape;
  shape.channels = r.u32();
  shape.height = r.u32();
  shape.width = r.u32();
  const std::uint32_t count = r.u32();
  if (count < 2) throw FormatError("checkpoint lists fewer than two layer widths", r.offset());
  std::vector<std::size_t> widths(count);
  for (auto& wdt : widths) wdt = r.u32();
  if (widths.front() != shape.size()) {
    throw FormatError("checkpoint input width does not match its image shape", r.offset());
  }
  std::vector<std::size_t> hidden(widths.begin() + 1, widths.end() - 1);
  Classifier model(shape, hidden, widths.back());
  auto params = model.mutable_parameters();
  r.require(params.size() * 8, "parameters");
  for (double& p : params) p = r.f64();
  const std::uint32_t meta_len = r.u32();
  std::string meta = r.bytes(meta_len);
  if (r.remaining() != 0) throw LengthMismatchError("trailing bytes after checkpoint", r.offset());
  if (metadata_json) *metadata_json = std::move(meta);
  model.freeze();
  return model;
}

}  // namespace freqbias::model
