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

#include <gtest/gtest.h>

#include <bit>
#include <fstream>
#include <numeric>

#include "fixtures.hpp"
#include "freqbias/attacks.hpp"
#include "freqbias/error.hpp"
#include "freqbias/masks.hpp"
#include "test_util.hpp"

using namespace freqbias;
using namespace freqbias::masks;

namespace {

const model::Classifier& clf() { return testutil::trained_spectral().trained.model; }

ImageBatch correct_subset(std::size_t limit) {
  const auto& f = testutil::trained_spectral();
  std::vector<std::size_t> idx(f.correct.begin(),
                               f.correct.begin() + std::min(limit, f.correct.size()));
  return f.data.test.select(idx);
}

MaskSet small_set() {
  MaskSet s;
  s.kind = MaskKind::kAdversarial;
  s.shape = Shape3{2, 3, 4};
  const std::size_t n = 3;
  const auto v = testutil::uniform(n * s.dim(), 5);
  s.values.assign(v.begin(), v.end());
  s.values[1] = 0.0f;
  s.values[2] = 1.0f;
  s.target_labels = {1, 0, 3};
  s.true_labels = {0, 2, 1};
  s.image_ids = {4, 9, 17};
  s.final_losses = {0.25, 1e-9, 3.5};
  s.densities = {0.5, 0.125, 1.0};
  s.preserved = {1, 0, 1};
  s.attack = {{"name", "pgd"}, {"epsilon", 0.05}};
  s.config = {{"lambda", 0.01}};
  return s;
}

std::vector<unsigned char> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::filesystem::path write_bytes(const std::filesystem::path& p,
                                  const std::vector<unsigned char>& b) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  return p;
}

}  // namespace

TEST(Masks, SparsityCases) {
  const std::vector<double> ones(48, 1.0);
  const std::vector<double> zeros(48, 0.0);
  std::vector<double> half(48, 0.0);
  std::fill(half.begin(), half.begin() + 24, 1.0);
  EXPECT_DOUBLE_EQ(sparsity(ones).l1, 48.0);
  EXPECT_DOUBLE_EQ(sparsity(ones).density, 1.0);
  EXPECT_DOUBLE_EQ(sparsity(zeros).l1, 0.0);
  EXPECT_DOUBLE_EQ(sparsity(zeros).density, 0.0);
  EXPECT_DOUBLE_EQ(sparsity(half).density, 0.5);
  const std::vector<float> at_threshold{0.5f, 0.50001f};
  EXPECT_DOUBLE_EQ(sparsity(at_threshold).density, 0.5);
}

TEST(Masks, ObjectiveGradientMatchesCentralDifferences) {
  const ImageBatch x = correct_subset(6);
  const Shape3 s = x.shape;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const spectral::SpectralFilter filter(x.image(i), s);
    const auto mask = testutil::uniform(s.size(), 100 + i, 0.05, 0.95);
    const auto [loss, grad] = mask_objective(clf(), filter, mask, x.labels[i], 0.01);
    for (std::size_t k = 0; k < s.size(); k += 7) {
      const double h = 1e-5;
      auto mp = mask;
      auto mm = mask;
      mp[k] += h;
      mm[k] -= h;
      const double fd = (mask_objective(clf(), filter, mp, x.labels[i], 0.01).first -
                         mask_objective(clf(), filter, mm, x.labels[i], 0.01).first) /
                        (2 * h);
      EXPECT_LT(testutil::rel_err(grad[k], fd), 1e-4) << "image " << i << " k " << k;
    }
  }
}

TEST(Masks, LambdaAddsConstantGradient) {
  const ImageBatch x = correct_subset(1);
  const spectral::SpectralFilter filter(x.image(0), x.shape);
  const auto mask = testutil::uniform(x.shape.size(), 3, 0.1, 0.9);
  const auto [l0, g0] = mask_objective(clf(), filter, mask, x.labels[0], 0.0);
  const auto [l1, g1] = mask_objective(clf(), filter, mask, x.labels[0], 0.01);
  const double sum = std::accumulate(mask.begin(), mask.end(), 0.0);
  EXPECT_NEAR(l1 - l0, 0.01 * sum, 1e-12);
  for (std::size_t k = 0; k < g0.size(); ++k) EXPECT_NEAR(g1[k] - g0[k], 0.01, 1e-15);
}

TEST(Masks, TrainingKeepsEntriesInUnitIntervalAndModelUntouched) {
  const ImageBatch x = correct_subset(3);
  const std::uint64_t before = clf().checksum();
  MaskTrainConfig cfg;
  cfg.min_steps = 50;
  cfg.max_steps = 200;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const MaskTrainResult r = train_mask(clf(), x.image(i), x.labels[i], cfg);
    EXPECT_GE(r.steps, cfg.min_steps);
    EXPECT_LE(r.steps, cfg.max_steps);
    for (double v : r.mask.values) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_NO_THROW(r.mask.validate());
  }
  EXPECT_EQ(clf().checksum(), before);
}

TEST(Masks, TrainingIsDeterministic) {
  const ImageBatch x = correct_subset(1);
  MaskTrainConfig cfg;
  cfg.min_steps = 100;
  const MaskTrainResult a = train_mask(clf(), x.image(0), x.labels[0], cfg);
  const MaskTrainResult b = train_mask(clf(), x.image(0), x.labels[0], cfg);
  EXPECT_EQ(a.mask.values, b.mask.values);
  EXPECT_EQ(a.steps, b.steps);
}

TEST(Masks, LambdaZeroPreservesAndLambdaShrinksDensity) {
  const ImageBatch x = correct_subset(12);
  MaskTrainConfig sparse;
  MaskTrainConfig dense;
  dense.lambda = 0.0;
  const MaskSet a = train_essential_masks(clf(), x, sparse);
  const MaskSet b = train_essential_masks(clf(), x, dense);
  EXPECT_DOUBLE_EQ(b.preserved_fraction(), 1.0);
  const double da = std::accumulate(a.densities.begin(), a.densities.end(), 0.0);
  const double db = std::accumulate(b.densities.begin(), b.densities.end(), 0.0);
  EXPECT_LT(da, db);
}

TEST(Masks, Preconditions) {
  const ImageBatch x = correct_subset(1);
  const int wrong = (x.labels[0] + 1) % 4;
  EXPECT_THROW(train_mask(clf(), x.image(0), wrong, MaskTrainConfig{}), PreconditionError);
  model::Classifier unfrozen = clf();
  unfrozen.unfreeze();
  EXPECT_THROW(train_mask(unfrozen, x.image(0), x.labels[0], MaskTrainConfig{}),
               PreconditionError);
  MaskTrainConfig bad;
  bad.lambda = -1.0;
  EXPECT_THROW(train_mask(clf(), x.image(0), x.labels[0], bad), InvalidArgument);
}

TEST(Masks, FilterSemanticsWithoutAttackSuccess) {
  const ImageBatch x = correct_subset(15);
  attacks::AttackConfig none;
  none.epsilon = 0.0;
  MaskTrainConfig cfg;
  cfg.min_steps = 20;
  cfg.max_steps = 60;
  const MaskSet ef = train_mask_set(clf(), x, MaskKind::kEssential, none, cfg);
  EXPECT_EQ(ef.size(), x.size());
  EXPECT_THROW(train_mask_set(clf(), x, MaskKind::kAdversarial, none, cfg), EmptySetError);
}

TEST(Masks, NestedSetsAndAlignment) {
  const auto& f = testutil::trained_spectral();
  std::vector<std::size_t> first(60);
  std::iota(first.begin(), first.end(), 0);
  const ImageBatch x = f.data.test.select(first);
  attacks::AttackConfig ac;
  ac.epsilon = 0.05;
  MaskTrainConfig cfg;
  const MaskSet ef = train_mask_set(clf(), x, MaskKind::kEssential, ac, cfg);
  const MaskSet af = train_mask_set(clf(), x, MaskKind::kAdversarial, ac, cfg);
  EXPECT_LE(af.size(), ef.size());
  EXPECT_LE(ef.size(), x.size());
  EXPECT_GE(ef.preserved_fraction(), 0.95);
  EXPECT_GE(af.preserved_fraction(), 0.95);
  for (std::size_t i = 0; i < ef.size(); ++i) {
    EXPECT_EQ(ef.target_labels[i], ef.true_labels[i]);
  }
  for (std::size_t i = 0; i < af.size(); ++i) {
    EXPECT_NE(af.target_labels[i], af.true_labels[i]);
  }
  EXPECT_FALSE(af.attack.is_null());
  const auto [ea, aa] = align_mask_sets(ef, af);
  EXPECT_EQ(ea.image_ids, aa.image_ids);
  EXPECT_TRUE(std::is_sorted(ea.image_ids.begin(), ea.image_ids.end()));
  EXPECT_EQ(ea.size(), af.size());
}

TEST(Masks, EssentialMassConcentratesOnSignatureBins) {
  const auto& f = testutil::trained_spectral();
  const ImageBatch x = correct_subset(40);
  const MaskSet ef = train_essential_masks(clf(), x, MaskTrainConfig{});
  const Shape3 s = ef.shape;
  std::mt19937_64 rng(11);
  double on = 0.0;
  double off = 0.0;
  std::size_t n_on = 0;
  std::size_t n_off = 0;
  for (std::size_t i = 0; i < ef.size(); ++i) {
    std::vector<bool> sig(s.size(), false);
    for (const auto& b : f.data.signatures[static_cast<std::size_t>(ef.target_labels[i])]) {
      sig[b.channel * s.plane() + b.u * s.width + b.v] = true;
    }
    const auto m = ef.mask(i);
    std::uniform_int_distribution<std::size_t> pick(0, s.size() - 1);
    for (std::size_t k = 0; k < s.size(); ++k) {
      if (sig[k]) {
        on += m[k];
        ++n_on;
      }
    }
    for (int draw = 0; draw < 32;) {
      const std::size_t k = pick(rng);
      if (sig[k]) continue;
      off += m[k];
      ++n_off;
      ++draw;
    }
  }
  ASSERT_GT(n_on, 0u);
  const double ratio = (on / n_on) / std::max(off / n_off, 1e-12);
  EXPECT_GE(ratio, 2.0);
}

TEST(Masks, MaskSetRoundTripIsBitExact) {
  testutil::TempDir dir("fmsk");
  const MaskSet s = small_set();
  save_mask_set(s, dir / "a.fmsk");
  const MaskSet back = load_mask_set(dir / "a.fmsk");
  EXPECT_EQ(back.kind, s.kind);
  EXPECT_EQ(back.shape, s.shape);
  ASSERT_EQ(back.values.size(), s.values.size());
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    ASSERT_EQ(std::bit_cast<std::uint32_t>(back.values[i]), std::bit_cast<std::uint32_t>(s.values[i]));
  }
  EXPECT_EQ(back.target_labels, s.target_labels);
  EXPECT_EQ(back.true_labels, s.true_labels);
  EXPECT_EQ(back.image_ids, s.image_ids);
  EXPECT_EQ(back.final_losses, s.final_losses);
  EXPECT_EQ(back.densities, s.densities);
  EXPECT_EQ(back.preserved, s.preserved);
  EXPECT_EQ(back.attack, s.attack);
  EXPECT_EQ(back.config, s.config);
  save_mask_set(back, dir / "b.fmsk");
  EXPECT_EQ(read_bytes(dir / "a.fmsk"), read_bytes(dir / "b.fmsk"));
}

TEST(Masks, MaskSetRejectsMalformedFiles) {
  testutil::TempDir dir("fmsk_bad");
  save_mask_set(small_set(), dir / "ok.fmsk");
  const auto bytes = read_bytes(dir / "ok.fmsk");
  auto magic = bytes;
  magic[1] = 'Z';
  EXPECT_THROW(load_mask_set(write_bytes(dir / "m", magic)), BadMagicError);
  auto version = bytes;
  version[4] = 2;
  EXPECT_THROW(load_mask_set(write_bytes(dir / "v", version)), VersionError);
  auto truncated = bytes;
  truncated.resize(40);
  EXPECT_THROW(load_mask_set(write_bytes(dir / "t", truncated)), LengthMismatchError);
  auto trailer = bytes;
  trailer.back() = '#';
  EXPECT_THROW(load_mask_set(write_bytes(dir / "j", trailer)), FormatError);
  auto short_trailer = bytes;
  short_trailer.resize(bytes.size() - 30);
  EXPECT_THROW(load_mask_set(write_bytes(dir / "s", short_trailer)), FormatError);
}

TEST(Masks, MaskSetValidation) {
  MaskSet s = small_set();
  EXPECT_NO_THROW(s.validate());
  s.image_ids.push_back(99);
  EXPECT_THROW(s.validate(), ShapeError);
  testutil::TempDir dir("fmsk_val");
  EXPECT_THROW(save_mask_set(s, dir / "x.fmsk"), ShapeError);
}

TEST(Masks, ToMatrixAndSelect) {
  const MaskSet s = small_set();
  const Matrix m = s.to_matrix();
  EXPECT_EQ(m.rows, 3u);
  EXPECT_EQ(m.cols, s.dim());
  EXPECT_EQ(m(2, 5), static_cast<double>(s.values[2 * s.dim() + 5]));
  const std::vector<std::size_t> rows{2, 0};
  const MaskSet t = s.select(rows);
  EXPECT_EQ(t.image_ids, (std::vector<std::uint64_t>{17, 4}));
  EXPECT_EQ(t.mask(0)[3], s.mask(2)[3]);
}
