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

#include "freqbias/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "freqbias/error.hpp"
#include "freqbias/parallel.hpp"

namespace freqbias::attacks {
namespace {

void check_model(const model::Classifier& model, const ImageBatch& x) {
  if (!model.frozen()) throw PreconditionError("attacks require a frozen classifier");
  x.validate();
  if (x.shape != model.input_shape()) {
    throw ShapeError("attack batch shape " + x.shape.str() + " does not match classifier input " +
                     model.input_shape().str());
  }
}

std::uint64_t sample_seed(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  return rng();
}

AdversarialBatch make_batch(std::string name, const AttackConfig& config, const ImageBatch& x,
                            std::span<const std::size_t> source_ids) {
  if (!source_ids.empty() && source_ids.size() != x.size()) {
    throw ShapeError("source id count does not match attack batch");
  }
  AdversarialBatch out;
  out.attack = std::move(name);
  out.config = config;
  out.images = ImageBatch(x.shape, x.size());
  out.original_labels = x.labels;
  out.adversarial_labels.assign(x.size(), -1);
  out.success.assign(x.size(), false);
  out.linf_norms.assign(x.size(), 0.0);
  out.source_ids.resize(x.size());
  if (source_ids.empty()) {
    std::iota(out.source_ids.begin(), out.source_ids.end(), std::size_t{0});
  } else {
    std::copy(source_ids.begin(), source_ids.end(), out.source_ids.begin());
  }
  return out;
}

void store(AdversarialBatch& out, std::size_t i, const SampleOutcome& s) {
  std::copy(s.adversarial.begin(), s.adversarial.end(), out.images.image(i).begin());
  out.images.labels[i] = s.prediction;
  out.adversarial_labels[i] = s.prediction;
  out.linf_norms[i] = s.linf_norm;
}

}  // namespace

void AttackConfig::validate(bool allow_zero_epsilon) const {
  if (!(epsilon > 0.0 || (allow_zero_epsilon && epsilon == 0.0))) {
    throw InvalidArgument("attack epsilon must be positive");
  }
  if (steps < 1) throw InvalidArgument("attack needs at least one step");
  if (step_size < 0.0) throw InvalidArgument("attack step size must be positive");
  if (!(epsilon_max > 0.0)) throw InvalidArgument("epsilon_max must be positive");
  if (grid_points < 1) throw InvalidArgument("grid_points must be at least 1");
  if (!(bisection_tolerance > 0.0)) throw InvalidArgument("bisection tolerance must be positive");
}

double AdversarialBatch::success_rate() const {
  if (success.empty()) return 0.0;
  return static_cast<double>(std::count(success.begin(), success.end(), true)) /
         static_cast<double>(success.size());
}

double linf_distance(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

SampleOutcome pgd_sample(const model::Classifier& model, std::span<const double> x, int label,
                         double epsilon, const AttackConfig& config, std::uint64_t seed) {
  SampleOutcome out;
  out.adversarial.assign(x.begin(), x.end());
  auto& adv = out.adversarial;
  const double step = config.effective_step_size(epsilon);
  auto project = [&](std::size_t i) {
    const double lo = std::max(0.0, x[i] - epsilon);
    const double hi = std::min(1.0, x[i] + epsilon);
    adv[i] = std::clamp(adv[i], lo, hi);
  };
  if (epsilon > 0.0) {
    if (config.random_start) {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> jitter(-epsilon, epsilon);
      for (std::size_t i = 0; i < adv.size(); ++i) {
        adv[i] += jitter(rng);
        project(i);
      }
    }
    const int labels[1] = {label};
    for (int it = 0; it < config.steps; ++it) {
      const model::Gradients g = model::backward(model, adv, 1, labels, 1.0, false);
      const auto grad = g.inputs.row(0);
      if (!std::all_of(grad.begin(), grad.end(), [](double v) { return std::isfinite(v); })) {
        out.prediction = model::predict(model, x);
        out.adversarial.assign(x.begin(), x.end());
        out.success = false;
        out.linf_norm = 0.0;
        return out;
      }
      for (std::size_t i = 0; i < adv.size(); ++i) {
        const double s = grad[i] > 0.0 ? 1.0 : (grad[i] < 0.0 ? -1.0 : 0.0);
        adv[i] += step * s;
        project(i);
      }
    }
  }
  out.prediction = model::predict(model, adv);
  out.success = out.prediction != label;
  out.linf_norm = linf_distance(adv, x);
  return out;
}

AdversarialBatch pgd_linf(const model::Classifier& model, const ImageBatch& x,
                          const AttackConfig& config, std::size_t workers,
                          std::span<const std::size_t> source_ids) {
  config.validate();
  check_model(model, x);
  AdversarialBatch out = make_batch("pgd", config, x, source_ids);
  // vector<bool> packs bits, so workers report through bytes.
  std::vector<std::uint8_t> ok(x.size(), 0);
  parallel_for(x.size(), workers, [&](std::size_t i) {
    const SampleOutcome s = pgd_sample(model, x.image(i), x.labels[i], config.epsilon, config,
                                       sample_seed(config.seed, i));
    store(out, i, s);
    ok[i] = s.success ? 1 : 0;
  });
  for (std::size_t i = 0; i < x.size(); ++i) out.success[i] = ok[i] != 0;
  return out;
}

AdversarialBatch min_norm_linf(const model::Classifier& model, const ImageBatch& x,
                               const AttackConfig& config, std::size_t workers,
                               std::span<const std::size_t> source_ids) {
  config.validate();
  check_model(model, x);
  AdversarialBatch out = make_batch("min_norm", config, x, source_ids);
  std::vector<std::uint8_t> ok(x.size(), 0);
  parallel_for(x.size(), workers, [&](std::size_t i) {
    const auto img = x.image(i);
    const int label = x.labels[i];
    const std::uint64_t seed = sample_seed(config.seed, i);

    const int clean = model::predict(model, img);
    if (clean != label) {
      SampleOutcome s;
      s.adversarial.assign(img.begin(), img.end());
      s.prediction = clean;
      s.success = true;
      store(out, i, s);
      ok[i] = 1;
      return;
    }

    double lo = 0.0;
    double hi = 0.0;
    SampleOutcome best;
    bool found = false;
    for (int g = 1; g <= config.grid_points && !found; ++g) {
      const double eps = config.epsilon_max * g / config.grid_points;
      SampleOutcome s = pgd_sample(model, img, label, eps, config, seed);
      if (s.success) {
        hi = eps;
        best = std::move(s);
        found = true;
      } else {
        lo = eps;
      }
    }
    if (!found) {
      SampleOutcome s;
      s.adversarial.assign(img.begin(), img.end());
      s.prediction = clean;
      store(out, i, s);
      return;
    }
    while (hi - lo > config.bisection_tolerance) {
      const double mid = 0.5 * (lo + hi);
      SampleOutcome s = pgd_sample(model, img, label, mid, config, seed);
      if (s.success) {
        hi = mid;
        best = std::move(s);
      } else {
        lo = mid;
      }
    }
    store(out, i, best);
    ok[i] = 1;
  });
  for (std::size_t i = 0; i < x.size(); ++i) out.success[i] = ok[i] != 0;
  return out;
}

}  // namespace freqbias::attacks
