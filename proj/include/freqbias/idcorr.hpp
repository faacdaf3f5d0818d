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

// Non-linear dependence between two blocks of coordinates via intrinsic
// dimension: estimate I_d of the concatenated cloud, rebuild the cloud many
// times with one block shuffled (joint = product of marginals), and ask with
// a one-sided Z-test whether the observed I_d sits below the shuffled ones.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

#include "freqbias/tensor.hpp"

namespace freqbias::idcorr {

/// Rows of a point cloud; N >= 3 finite rows.
using PointCloud = Matrix;

struct Deduplicated {
  PointCloud points;
  std::size_t removed = 0;
};

/// Drops exact duplicate rows, keeping first occurrences in order.
Deduplicated deduplicate_rows(const PointCloud& points);

struct NeighborDistances {
  std::vector<double> r1;
  std::vector<double> r2;
};

/// Exact first and second nearest-neighbour Euclidean distances.
/// Throws DegenerateInput for fewer than 3 rows or a zero distance.
NeighborDistances knn2(const PointCloud& points, std::size_t workers = 1);

enum class TwoNNMethod { kMaximumLikelihood, kLinearFit };

struct TwoNNEstimate {
  double dimension = 0.0;
  std::size_t points = 0;  ///< after de-duplication
  std::size_t kept = 0;    ///< after discarding the largest ratios
  std::size_t duplicates_removed = 0;
};

/// TwoNN estimator on mu = r2 / r1. The ceil(discard_fraction * N) largest
/// ratios are treated as right-censored:
///   MLE:        d = n / (sum_{kept} log mu + (N - n) log mu_(n))
///   linear fit: slope through the origin of -log(1 - F(mu)) vs log mu
TwoNNEstimate twonn_estimate(const PointCloud& points, double discard_fraction = 0.1,
                             TwoNNMethod method = TwoNNMethod::kMaximumLikelihood,
                             std::size_t workers = 1);

double twonn(const PointCloud& points, double discard_fraction = 0.1,
             TwoNNMethod method = TwoNNMethod::kMaximumLikelihood, std::size_t workers = 1);

/// Column-wise concatenation [A | B].
PointCloud concat(const Matrix& a, const Matrix& b);

/// [A | B[perm]] for an explicit permutation of B's rows.
PointCloud shuffle_concat(const Matrix& a, const Matrix& b, std::span<const std::size_t> perm);

/// [A | B[perm]] for a uniform random permutation drawn from `seed`.
PointCloud shuffle_concat(const Matrix& a, const Matrix& b, std::uint64_t seed);

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

/// Seed of the k-th shuffle, derived from (seed, k) only.
std::uint64_t shuffle_seed(std::uint64_t seed, std::size_t index);

struct ZTest {
  double z = 0.0;
  double p = 0.0;
  double null_mean = 0.0;
  double null_std = 0.0;  ///< population standard deviation
};

/// z = (observed - mean) / std, p = Phi(z).
ZTest z_test_one_sided(double observed, std::span<const double> null_samples);

/// Standard normal CDF.
double normal_cdf(double z);

struct CosineStats {
  double mean = 0.0;
  double std = 0.0;
};

/// Cosine similarity of aligned rows; rejects zero rows.
CosineStats cosine_similarity_stats(const Matrix& a, const Matrix& b);

/// Squared sample Pearson correlation.
double pearson_r2(std::span<const double> x, std::span<const double> y);

struct CorrelationConfig {
  std::size_t n_shuffles = 50;
  double discard_fraction = 0.1;
  TwoNNMethod method = TwoNNMethod::kMaximumLikelihood;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  nlohmann::json to_json() const;
};

struct CorrelationReport {
  double id_observed = 0.0;
  std::vector<double> shuffled_ids;
  double shuffled_mean = 0.0;
  double shuffled_std = 0.0;
  double z_score = 0.0;
  double p_value = 0.0;
  std::optional<CosineStats> cosine;  ///< absent for unequal widths or zero rows
  std::size_t points = 0;
  std::size_t duplicates_removed = 0;
  CorrelationConfig config;

  nlohmann::json to_json() const;
};

CorrelationReport correlate(const Matrix& a, const Matrix& b,
                            const CorrelationConfig& config = {});

}  // namespace freqbias::idcorr
