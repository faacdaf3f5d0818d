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

#include "freqbias/idcorr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "freqbias/error.hpp"
#include "freqbias/parallel.hpp"
#include "freqbias/simd/kernels.hpp"

namespace freqbias::idcorr {
namespace {

void check_cloud(const PointCloud& points) {
  if (points.data.size() != points.rows * points.cols) throw ShapeError("malformed point cloud");
  if (points.cols == 0) throw DegenerateInput("point cloud has no coordinates");
  if (points.rows < 3) {
    throw DegenerateInput("need at least 3 points, got " + std::to_string(points.rows));
  }
  for (double v : points.data) {
    if (!std::isfinite(v)) throw InvalidArgument("point cloud contains non-finite values");
  }
}

std::pair<double, double> mean_and_population_std(std::span<const double> xs) {
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / n)};
}

}  // namespace

Deduplicated deduplicate_rows(const PointCloud& points) {
  std::vector<std::size_t> order(points.rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto row_less = [&](std::size_t a, std::size_t b) {
    const auto ra = points.row(a);
    const auto rb = points.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  };
  std::stable_sort(order.begin(), order.end(), row_less);
  std::vector<bool> drop(points.rows, false);
  std::size_t removed = 0;
  for (std::size_t k = 1; k < order.size(); ++k) {
    const auto prev = points.row(order[k - 1]);
    const auto cur = points.row(order[k]);
    if (std::equal(prev.begin(), prev.end(), cur.begin())) {
      // stable_sort keeps the earliest occurrence first within a run.
      drop[order[k]] = true;
      ++removed;
    }
  }
  Deduplicated out;
  out.removed = removed;
  out.points.cols = points.cols;
  out.points.rows = points.rows - removed;
  out.points.data.reserve(out.points.rows * points.cols);
  for (std::size_t i = 0; i < points.rows; ++i) {
    if (drop[i]) continue;
    const auto r = points.row(i);
    out.points.data.insert(out.points.data.end(), r.begin(), r.end());
  }
  return out;
}

NeighborDistances knn2(const PointCloud& points, std::size_t workers) {
  check_cloud(points);
  const std::size_t n = points.rows;
  NeighborDistances out;
  out.r1.assign(n, 0.0);
  out.r2.assign(n, 0.0);
  const simd::KernelTable& k = simd::active_kernels();
  std::vector<std::uint8_t> duplicate(n, 0);
  parallel_for(n, workers, [&](std::size_t i) {
    const double* xi = points.row(i).data();
    double best1 = std::numeric_limits<double>::infinity();
    double best2 = best1;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = k.squared_distance(xi, points.row(j).data(), points.cols);
      if (d < best1) {
        best2 = best1;
        best1 = d;
      } else if (d < best2) {
        best2 = d;
      }
    }
    if (best1 == 0.0) duplicate[i] = 1;
    out.r1[i] = std::sqrt(best1);
    out.r2[i] = std::sqrt(best2);
  });
  if (std::find(duplicate.begin(), duplicate.end(), 1) != duplicate.end()) {
    throw DegenerateInput("point cloud has duplicate rows; deduplicate before knn2");
  }
  return out;
}

TwoNNEstimate twonn_estimate(const PointCloud& points, double discard_fraction,
                             TwoNNMethod method, std::size_t workers) {
  if (!(discard_fraction >= 0.0 && discard_fraction < 1.0)) {
    throw InvalidArgument("discard fraction must lie in [0, 1)");
  }
  check_cloud(points);
  Deduplicated unique = deduplicate_rows(points);
  if (unique.points.rows < 3) {
    throw DegenerateInput("fewer than 3 distinct points after removing duplicates");
  }
  const NeighborDistances nn = knn2(unique.points, workers);
  const std::size_t n_total = unique.points.rows;
  std::vector<double> log_mu(n_total);
  for (std::size_t i = 0; i < n_total; ++i) log_mu[i] = std::log(nn.r2[i] / nn.r1[i]);
  std::sort(log_mu.begin(), log_mu.end());

  const auto discard =
      static_cast<std::size_t>(std::ceil(discard_fraction * static_cast<double>(n_total)));
  const std::size_t kept = n_total - std::min(discard, n_total);
  if (kept < 2) throw DegenerateInput("discard fraction leaves fewer than two ratios");

  TwoNNEstimate est;
  est.points = n_total;
  est.kept = kept;
  est.duplicates_removed = unique.removed;

  if (method == TwoNNMethod::kMaximumLikelihood) {
    double sum = 0.0;
    for (std::size_t i = 0; i < kept; ++i) sum += log_mu[i];
    sum += static_cast<double>(n_total - kept) * log_mu[kept - 1];
    if (!(sum > 0.0)) throw DegenerateInput("all neighbour ratios equal 1; dimension undefined");
    est.dimension = static_cast<double>(kept) / sum;
  } else {
    // Empirical CDF F_i = i / N; the point with F = 1 is never used.
    const std::size_t used = std::min(kept, n_total - 1);
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < used; ++i) {
      const double f = static_cast<double>(i + 1) / static_cast<double>(n_total);
      const double y = -std::log(1.0 - f);
      sxy += log_mu[i] * y;
      sxx += log_mu[i] * log_mu[i];
    }
    if (!(sxx > 0.0)) throw DegenerateInput("all neighbour ratios equal 1; dimension undefined");
    est.dimension = sxy / sxx;
  }
  return est;
}

double twonn(const PointCloud& points, double discard_fraction, TwoNNMethod method,
             std::size_t workers) {
  return twonn_estimate(points, discard_fraction, method, workers).dimension;
}

PointCloud concat(const Matrix& a, const Matrix& b) {
  std::vector<std::size_t> identity(b.rows);
  std::iota(identity.begin(), identity.end(), std::size_t{0});
  return shuffle_concat(a, b, identity);
}

PointCloud shuffle_concat(const Matrix& a, const Matrix& b, std::span<const std::size_t> perm) {
  if (a.rows != b.rows) {
    throw ShapeError("blocks have different numbers of rows: " + std::to_string(a.rows) +
                     " vs " + std::to_string(b.rows));
  }
  if (perm.size() != b.rows) throw ShapeError("permutation length does not match row count");
  PointCloud out(a.rows, a.cols + b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    auto dst = out.row(i);
    const auto ra = a.row(i);
    const auto rb = b.row(perm[i]);
    std::copy(ra.begin(), ra.end(), dst.begin());
    std::copy(rb.begin(), rb.end(), dst.begin() + static_cast<std::ptrdiff_t>(a.cols));
  }
  return out;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

PointCloud shuffle_concat(const Matrix& a, const Matrix& b, std::uint64_t seed) {
  if (a.rows != b.rows) {
    throw ShapeError("blocks have different numbers of rows: " + std::to_string(a.rows) +
                     " vs " + std::to_string(b.rows));
  }
  return shuffle_concat(a, b, seeded_permutation(b.rows, seed));
}

std::uint64_t shuffle_seed(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), 0x5eedu};
  std::mt19937_64 rng(seq);
  return rng();
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

ZTest z_test_one_sided(double observed, std::span<const double> null_samples) {
  if (null_samples.size() < 2) throw InvalidArgument("z-test needs at least two null samples");
  const auto [mean, sd] = mean_and_population_std(null_samples);
  if (!(sd > 0.0)) throw DegenerateInput("null samples have zero spread");
  ZTest t;
  t.null_mean = mean;
  t.null_std = sd;
  t.z = (observed - mean) / sd;
  t.p = normal_cdf(t.z);
  return t;
}

CosineStats cosine_similarity_stats(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows || a.cols != b.cols) throw ShapeError("cosine needs equal shapes");
  if (a.rows == 0) throw InvalidArgument("cosine of empty matrices");
  std::vector<double> cos(a.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double na = std::sqrt(simd::dot(a.row(i), a.row(i)));
    const double nb = std::sqrt(simd::dot(b.row(i), b.row(i)));
    if (na == 0.0 || nb == 0.0) {
      throw DegenerateInput("zero-norm row " + std::to_string(i) + " in cosine similarity");
    }
    cos[i] = simd::dot(a.row(i), b.row(i)) / (na * nb);
  }
  const auto [mean, sd] = mean_and_population_std(cos);
  return {mean, sd};
}

double pearson_r2(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("pearson needs equal-length samples");
  if (x.size() < 2) throw InvalidArgument("pearson needs at least two samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DegenerateInput("pearson of a constant sample");
  const double r = sxy / std::sqrt(sxx * syy);
  return std::min(1.0, r * r);
}

nlohmann::json CorrelationConfig::to_json() const {
  return {{"n_shuffles", n_shuffles},
          {"discard_fraction", discard_fraction},
          {"method", method == TwoNNMethod::kMaximumLikelihood ? "mle" : "linear_fit"},
          {"seed", seed}};
}

nlohmann::json CorrelationReport::to_json() const {
  nlohmann::json j = {{"id_observed", id_observed},
                      {"shuffled_ids", shuffled_ids},
                      {"shuffled_mean", shuffled_mean},
                      {"shuffled_std", shuffled_std},
                      {"z_score", z_score},
                      {"p_value", p_value},
                      {"points", points},
                      {"duplicates_removed", duplicates_removed},
                      {"seed", config.seed},
                      {"n_shuffles", config.n_shuffles},
                      {"config", config.to_json()}};
  if (cosine) {
    j["cosine_mean"] = cosine->mean;
    j["cosine_std"] = cosine->std;
  } else {
    j["cosine_mean"] = nullptr;
    j["cosine_std"] = nullptr;
  }
  return j;
}

CorrelationReport correlate(const Matrix& a, const Matrix& b, const CorrelationConfig& config) {
  if (a.rows != b.rows) {
    throw ShapeError("blocks have different numbers of rows: " + std::to_string(a.rows) +
                     " vs " + std::to_string(b.rows));
  }
  if (config.n_shuffles < 2) throw InvalidArgument("correlate needs at least two shuffles");
  CorrelationReport report;
  report.config = config;
  const TwoNNEstimate observed =
      twonn_estimate(concat(a, b), config.discard_fraction, config.method, config.workers);
  report.id_observed = observed.dimension;
  report.points = observed.points;
  report.duplicates_removed = observed.duplicates_removed;

  report.shuffled_ids.assign(config.n_shuffles, 0.0);
  // Shuffles run one at a time; each estimate parallelises internally.
  for (std::size_t k = 0; k < config.n_shuffles; ++k) {
    const PointCloud shuffled = shuffle_concat(a, b, shuffle_seed(config.seed, k));
    report.shuffled_ids[k] =
        twonn(shuffled, config.discard_fraction, config.method, config.workers);
  }
  const ZTest t = z_test_one_sided(report.id_observed, report.shuffled_ids);
  report.shuffled_mean = t.null_mean;
  report.shuffled_std = t.null_std;
  report.z_score = t.z;
  report.p_value = t.p;

  if (a.cols == b.cols) {
    try {
      report.cosine = cosine_similarity_stats(a, b);
    } catch (const DegenerateInput&) {
      report.cosine.reset();
    }
  }
  return report;
}

}  // namespace freqbias::idcorr
