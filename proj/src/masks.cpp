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

#include "freqbias/masks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "freqbias/error.hpp"
#include "freqbias/parallel.hpp"

namespace freqbias::masks {
namespace {

void check_model(const model::Classifier& model, const Shape3& shape) {
  if (!model.frozen()) throw PreconditionError("mask training requires a frozen classifier");
  if (shape != model.input_shape()) {
    throw ShapeError("image shape " + shape.str() + " does not match classifier input " +
                     model.input_shape().str());
  }
}

struct Job {
  std::size_t source = 0;  // position in the input batch
  std::uint64_t image_id = 0;
  int target = 0;
  int true_label = 0;
};

MaskSet run_jobs(const model::Classifier& model, const ImageBatch& images,
                 std::span<const Job> jobs, MaskKind kind, const MaskTrainConfig& config,
                 std::size_t workers) {
  if (jobs.empty()) {
    throw EmptySetError(std::string("no eligible images for ") + kind_name(kind) + " masks");
  }
  std::vector<MaskTrainResult> results(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t j) {
    results[j] = train_mask(model, images.image(jobs[j].source), jobs[j].target, config);
  });

  MaskSet set;
  set.kind = kind;
  set.shape = images.shape;
  set.config = config.to_json();
  set.values.reserve(jobs.size() * images.shape.size());
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const auto& r = results[j];
    for (double v : r.mask.values) set.values.push_back(static_cast<float>(v));
    set.target_labels.push_back(jobs[j].target);
    set.true_labels.push_back(jobs[j].true_label);
    set.image_ids.push_back(jobs[j].image_id);
    set.final_losses.push_back(r.final_loss);
    set.densities.push_back(sparsity(r.mask.values).density);
    set.preserved.push_back(r.preserved ? 1 : 0);
  }
  return set;
}

}  // namespace

void MaskTrainConfig::validate() const {
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be non-negative");
  if (!(learning_rate > 0.0)) throw InvalidArgument("mask learning rate must be positive");
  if (min_steps < 0 || max_steps < 1 || min_steps > max_steps) {
    throw InvalidArgument("mask training needs 0 <= min_steps <= max_steps, max_steps >= 1");
  }
  if (window < 1) throw InvalidArgument("convergence window must be positive");
  if (!(tolerance >= 0.0)) throw InvalidArgument("convergence tolerance must be non-negative");
}

nlohmann::json MaskTrainConfig::to_json() const {
  return {{"lambda", lambda},       {"learning_rate", learning_rate}, {"min_steps", min_steps},
          {"max_steps", max_steps}, {"window", window},               {"tolerance", tolerance},
          {"seed", seed}};
}

std::pair<double, std::vector<double>> mask_objective(const model::Classifier& model,
                                                      const spectral::SpectralFilter& filter,
                                                      std::span<const double> mask, int target,
                                                      double lambda) {
  const std::vector<double> filtered = filter.apply(mask);
  const int labels[1] = {target};
  const model::Gradients g = model::backward(model, filtered, 1, labels, 1.0, false);
  std::vector<double> grad = filter.gradient(g.inputs.row(0));
  double l1 = 0.0;
  for (std::size_t k = 0; k < grad.size(); ++k) {
    grad[k] += lambda;
    l1 += mask[k];
  }
  return {g.loss + lambda * l1, std::move(grad)};
}

MaskTrainResult train_mask(const model::Classifier& model, std::span<const double> image,
                           int target, const MaskTrainConfig& config) {
  config.validate();
  const Shape3 shape = model.input_shape();
  check_model(model, shape);
  if (image.size() != shape.size()) throw ShapeError("image size does not match classifier input");
  if (target < 0 || static_cast<std::size_t>(target) >= model.num_classes()) {
    throw InvalidArgument("mask target label out of range");
  }
  const int initial = model::predict(model, image);
  if (initial != target) {
    throw PreconditionError("unfiltered image is classified as " + std::to_string(initial) +
                            ", not the mask target " + std::to_string(target));
  }

  const spectral::SpectralFilter filter(image, shape);
  MaskTrainResult out;
  out.mask = spectral::SpectralMask::filled(shape, 1.0);
  std::vector<double>& mask = out.mask.values;
  model::AdamState adam(mask.size(), config.learning_rate);

  double best = std::numeric_limits<double>::infinity();
  int last_improvement = 0;
  int step = 0;
  while (step < config.max_steps) {
    auto [loss, grad] = mask_objective(model, filter, mask, target, config.lambda);
    ++step;
    if (loss < best - config.tolerance) {
      best = loss;
      last_improvement = step;
    } else {
      best = std::min(best, loss);
    }
    model::adam_step(adam, mask, grad);
    for (double& m : mask) m = std::clamp(m, 0.0, 1.0);
    if (step >= config.min_steps && step - last_improvement >= config.window) break;
  }
  out.steps = step;

  const std::vector<double> filtered = filter.apply(mask);
  const Matrix logits = model::forward(model, filtered, 1);
  const int labels[1] = {target};
  out.final_cross_entropy = model::cross_entropy(logits, labels);
  out.final_loss = out.final_cross_entropy + config.lambda * sparsity(mask).l1;
  out.final_prediction = model::argmax(logits.row(0));
  out.preserved = out.final_prediction == target;
  return out;
}

Sparsity sparsity(std::span<const double> mask) {
  Sparsity s;
  if (mask.empty()) return s;
  std::size_t above = 0;
  for (double v : mask) {
    s.l1 += std::abs(v);
    if (v > 0.5) ++above;
  }
  s.density = static_cast<double>(above) / static_cast<double>(mask.size());
  return s;
}

Sparsity sparsity(std::span<const float> mask) {
  std::vector<double> widened(mask.begin(), mask.end());
  return sparsity(std::span<const double>(widened));
}

std::string kind_name(MaskKind kind) {
  return kind == MaskKind::kEssential ? "essential" : "adversarial";
}

double MaskSet::preserved_fraction() const {
  if (preserved.empty()) return 0.0;
  return static_cast<double>(std::count(preserved.begin(), preserved.end(), 1)) /
         static_cast<double>(preserved.size());
}

Matrix MaskSet::to_matrix() const {
  return Matrix(size(), dim(), std::vector<double>(values.begin(), values.end()));
}

MaskSet MaskSet::select(std::span<const std::size_t> rows) const {
  MaskSet out;
  out.kind = kind;
  out.shape = shape;
  out.attack = attack;
  out.config = config;
  for (std::size_t r : rows) {
    const auto m = mask(r);
    out.values.insert(out.values.end(), m.begin(), m.end());
    out.target_labels.push_back(target_labels[r]);
    out.true_labels.push_back(true_labels[r]);
    out.image_ids.push_back(image_ids[r]);
    out.final_losses.push_back(final_losses[r]);
    out.densities.push_back(densities[r]);
    out.preserved.push_back(preserved[r]);
  }
  return out;
}

void MaskSet::validate() const {
  const std::size_t n = size();
  if (n == 0) throw EmptySetError("mask set is empty");
  if (values.size() != n * dim() || target_labels.size() != n || true_labels.size() != n ||
      final_losses.size() != n || densities.size() != n || preserved.size() != n) {
    throw ShapeError("mask set fields disagree on the number of masks");
  }
  for (float v : values) {
    if (!(v >= 0.0f && v <= 1.0f)) throw InvalidArgument("mask set entry outside [0,1]");
  }
  if (kind == MaskKind::kAdversarial && attack.is_null()) {
    throw InvalidArgument("adversarial mask set without attack metadata");
  }
}

MaskSet train_essential_masks(const model::Classifier& model, const ImageBatch& dataset,
                              const MaskTrainConfig& config, std::size_t workers) {
  config.validate();
  dataset.validate();
  check_model(model, dataset.shape);
  const Matrix logits = model::forward(model, dataset);
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (model::argmax(logits.row(i)) == dataset.labels[i]) {
      jobs.push_back({i, i, dataset.labels[i], dataset.labels[i]});
    }
  }
  return run_jobs(model, dataset, jobs, MaskKind::kEssential, config, workers);
}

MaskSet train_adversarial_masks(const model::Classifier& model,
                                const attacks::AdversarialBatch& adversarial,
                                const ImageBatch& clean, const MaskTrainConfig& config,
                                std::size_t workers) {
  config.validate();
  check_model(model, adversarial.images.shape);
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < adversarial.size(); ++i) {
    if (!adversarial.success[i]) continue;
    const std::size_t id = adversarial.source_ids[i];
    if (!clean.empty() && clean.labels.at(id) != adversarial.original_labels[i]) {
      throw PreconditionError("adversarial batch does not match the clean dataset labels");
    }
    jobs.push_back({i, id, adversarial.adversarial_labels[i], adversarial.original_labels[i]});
  }
  MaskSet set = run_jobs(model, adversarial.images, jobs, MaskKind::kAdversarial, config, workers);
  set.attack = {{"name", adversarial.attack},
                {"epsilon", adversarial.config.epsilon},
                {"steps", adversarial.config.steps},
                {"step_size", adversarial.config.effective_step_size(adversarial.config.epsilon)},
                {"epsilon_max", adversarial.config.epsilon_max},
                {"seed", adversarial.config.seed},
                {"success_rate", adversarial.success_rate()}};
  return set;
}

MaskSet train_mask_set(const model::Classifier& model, const ImageBatch& dataset, MaskKind kind,
                       const attacks::AttackConfig& attack_config,
                       const MaskTrainConfig& mask_config, std::size_t workers,
                       const std::string& attack) {
  if (kind == MaskKind::kEssential) {
    return train_essential_masks(model, dataset, mask_config, workers);
  }
  mask_config.validate();
  dataset.validate();
  check_model(model, dataset.shape);
  const Matrix logits = model::forward(model, dataset);
  std::vector<std::size_t> correct;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (model::argmax(logits.row(i)) == dataset.labels[i]) correct.push_back(i);
  }
  if (correct.empty()) throw EmptySetError("no correctly classified images to attack");
  const ImageBatch subset = dataset.select(correct);
  attacks::AdversarialBatch adv;
  if (attack == "pgd") {
    adv = attacks::pgd_linf(model, subset, attack_config, workers, correct);
  } else if (attack == "min_norm") {
    adv = attacks::min_norm_linf(model, subset, attack_config, workers, correct);
  } else {
    throw InvalidArgument("unknown attack '" + attack + "'");
  }
  return train_adversarial_masks(model, adv, dataset, mask_config, workers);
}

std::pair<MaskSet, MaskSet> align_mask_sets(const MaskSet& essential,
                                            const MaskSet& adversarial) {
  if (essential.shape != adversarial.shape) throw ShapeError("mask sets have different shapes");
  std::vector<std::pair<std::uint64_t, std::size_t>> ef, af;
  for (std::size_t i = 0; i < essential.size(); ++i) ef.emplace_back(essential.image_ids[i], i);
  for (std::size_t i = 0; i < adversarial.size(); ++i) af.emplace_back(adversarial.image_ids[i], i);
  std::sort(ef.begin(), ef.end());
  std::sort(af.begin(), af.end());
  std::vector<std::size_t> ef_rows, af_rows;
  auto a = ef.begin();
  auto b = af.begin();
  while (a != ef.end() && b != af.end()) {
    if (a->first < b->first) {
      ++a;
    } else if (b->first < a->first) {
      ++b;
    } else {
      ef_rows.push_back(a->second);
      af_rows.push_back(b->second);
      ++a;
      ++b;
    }
  }
  if (ef_rows.empty()) throw EmptySetError("essential and adversarial mask sets share no images");
  return {essential.select(ef_rows), adversarial.select(af_rows)};
}

}  // namespace freqbias::masks
