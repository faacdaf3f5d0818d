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

// Acceptance checks. Each criterion prints one PASS/FAIL line with the
// measured values; the exit code is non-zero if any criterion fails.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "freqbias/app.hpp"
#include "freqbias/data.hpp"
#include "freqbias/error.hpp"
#include "freqbias/idcorr.hpp"
#include "freqbias/masks.hpp"
#include "freqbias/model.hpp"
#include "freqbias/simd/kernels.hpp"
#include "test_util.hpp"

using namespace freqbias;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "!") + what;
  }
};

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

Outcome spiral_benchmark() {
  Outcome o;
  testutil::TempDir dir("accept_spiral");
  app::RunConfig cfg;
  cfg.set("seed", "0");
  cfg.set("n_points", "5000");
  cfg.set("shuffles", "50");
  const auto t0 = Clock::now();
  const app::SpiralDemoResult r = app::run_spiral_demo(cfg, dir.path());
  const double secs = seconds_since(t0);
  const auto& c = r.report;
  o.check(r.r2 < 0.05, "R2=" + num(r.r2) + "<0.05");
  o.check(c.id_observed >= 0.95 && c.id_observed <= 1.15,
          "I_d=" + num(c.id_observed) + " in [0.95,1.15]");
  o.check(c.shuffled_mean >= 1.85 && c.shuffled_mean <= 2.05,
          "shuffled=" + num(c.shuffled_mean) + "+-" + num(c.shuffled_std) + " in [1.85,2.05]");
  o.check(c.z_score < -20.0, "Z=" + num(c.z_score) + "<-20");
  o.check(c.p_value < 1e-10, "P=" + num(c.p_value) + "<1e-10");
  o.check(c.shuffled_ids.size() == 50, "shuffles=" + std::to_string(c.shuffled_ids.size()));
  o.check(secs < 60.0, "time=" + num(secs) + "s<60s");
  return o;
}

Outcome z_test_rows() {
  Outcome o;
  const std::vector<double> null_a{34.98 - 0.73, 34.98 + 0.73};
  const idcorr::ZTest a = idcorr::z_test_one_sided(31.65, null_a);
  o.check(std::abs(a.z + 4.56) <= 0.01, "Z1=" + num(a.z) + " (-4.56+-0.01)");
  o.check(std::abs(a.p - 2.5e-6) <= 0.25e-6, "P1=" + num(a.p) + " (2.5e-6+-10%)");
  const std::vector<double> null_b{24.49 - 0.41, 24.49 + 0.41};
  const idcorr::ZTest b = idcorr::z_test_one_sided(23.31, null_b);
  o.check(std::abs(b.z + 2.88) <= 0.03, "Z2=" + num(b.z) + " (-2.88+-0.03)");
  return o;
}

Outcome twonn_sweep() {
  Outcome o;
  const auto t0 = Clock::now();
  for (std::size_t d = 1; d <= 5; ++d) {
    const double est = idcorr::twonn(data::gen_hypercube(10000, d, 100 + d), 0.1,
                                     idcorr::TwoNNMethod::kMaximumLikelihood, 1);
    const double rel = std::abs(est - static_cast<double>(d)) / static_cast<double>(d);
    o.check(rel <= 0.1, "d=" + std::to_string(d) + ":" + num(est));
  }
  // Exhaustive oracle with the scalar reference distance and a full sort.
  const auto& k = simd::scalar_kernels();
  bool exact = true;
  for (std::size_t n : {3u, 17u, 128u, 500u}) {
    for (std::size_t dim : {1u, 3u, 8u}) {
      const Matrix p(n, dim, testutil::uniform(n * dim, n * 31 + dim));
      const idcorr::NeighborDistances got = idcorr::knn2(p, 2);
      for (std::size_t i = 0; i < n && exact; ++i) {
        std::vector<double> dist;
        for (std::size_t j = 0; j < n; ++j) {
          if (j != i) dist.push_back(std::sqrt(k.squared_distance(&p.data[i * dim], &p.data[j * dim], dim)));
        }
        std::sort(dist.begin(), dist.end());
        exact = got.r1[i] == dist[0] && got.r2[i] == dist[1];
      }
    }
  }
  o.check(exact, "knn2 == oracle for N<=500");
  const double secs = seconds_since(t0);
  o.check(secs < 120.0, "time=" + num(secs) + "s<120s");
  return o;
}

double vector_rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::max(std::sqrt(std::max(na, nb)), 1e-300);
  return std::sqrt(diff) / scale;
}

std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& f,
                                       const std::vector<double>& x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    auto xp = x;
    auto xm = x;
    xp[k] += h;
    xm[k] -= h;
    g[k] = (f(xp) - f(xm)) / (2 * h);
  }
  return g;
}

Outcome gradient_suite() {
  Outcome o;
  double worst_params = 0.0;
  double worst_inputs = 0.0;
  int model_instances = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Shape3 shape{1 + seed % 2, 3, 2 + seed % 3};
    const std::vector<std::size_t> hidden =
        seed % 3 == 0 ? std::vector<std::size_t>{} : std::vector<std::size_t>{3 + seed % 4, 4};
    const std::size_t classes = 2 + seed % 3;
    const model::Classifier m = model::Classifier::initialized(shape, hidden, classes, seed);
    const std::size_t n = 3;
    const auto x = testutil::uniform(n * shape.size(), 500 + seed);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>((i + seed) % classes);
    const model::Gradients g = model::backward(m, x, n, y);
    const std::vector<double> p0(m.parameters().begin(), m.parameters().end());
    auto loss_params = [&](const std::vector<double>& p) {
      model::Classifier c = m;
      std::copy(p.begin(), p.end(), c.mutable_parameters().begin());
      return model::cross_entropy(model::forward(c, x, n), y);
    };
    auto loss_inputs = [&](const std::vector<double>& xi) {
      return model::cross_entropy(model::forward(m, xi, n), y);
    };
    worst_params = std::max(worst_params,
                            vector_rel_err(g.parameters, central_difference(loss_params, p0, 1e-6)));
    worst_inputs = std::max(worst_inputs,
                            vector_rel_err(g.inputs.data, central_difference(loss_inputs, x, 1e-6)));
    ++model_instances;
  }
  o.check(worst_params < 1e-5, "params max rel=" + num(worst_params));
  o.check(worst_inputs < 1e-5, "inputs max rel=" + num(worst_inputs));

  double worst_mask = 0.0;
  int mask_instances = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Shape3 shape{1 + seed % 2, 4 + seed % 3, 4};
    model::Classifier m = model::Classifier::initialized(shape, {6}, 3, 900 + seed);
    m.freeze();
    const auto img = testutil::uniform(shape.size(), 700 + seed);
    const spectral::SpectralFilter filter(img, shape);
    const auto mask = testutil::uniform(shape.size(), 800 + seed, 0.05, 0.95);
    const int target = static_cast<int>(seed % 3);
    const double lambda = 0.01 * static_cast<double>(seed % 4);
    const auto analytic = masks::mask_objective(m, filter, mask, target, lambda).second;
    auto f = [&](const std::vector<double>& mk) {
      return masks::mask_objective(m, filter, mk, target, lambda).first;
    };
    worst_mask = std::max(worst_mask, vector_rel_err(analytic, central_difference(f, mask, 1e-5)));
    ++mask_instances;
  }
  o.check(worst_mask < 1e-4, "mask max rel=" + num(worst_mask));
  o.check(model_instances >= 20 && mask_instances >= 20,
          "instances=" + std::to_string(model_instances) + "+" + std::to_string(mask_instances));
  return o;
}

Outcome pipeline() {
  Outcome o;
  testutil::TempDir dir("accept_pipeline");
  app::RunConfig cfg;
  cfg.set("seed", "0");
  cfg.set("epsilon", "0.05");
  cfg.set("shuffles", "50");
  const app::PipelineResult r = app::run_pipeline(cfg, dir.path());
  o.check(r.test_accuracy >= 0.95, "test_acc=" + num(r.test_accuracy));
  o.check(r.attack_success_rate >= 0.90, "pgd_success=" + num(r.attack_success_rate));
  o.check(r.ef_preserved >= 0.95, "ef_preserved=" + num(r.ef_preserved));
  o.check(r.af_preserved >= 0.95, "af_preserved=" + num(r.af_preserved));
  o.check(r.ef_density_lambda0.has_value() && r.ef_density < *r.ef_density_lambda0,
          "ef_density=" + num(r.ef_density) + "<" +
              num(r.ef_density_lambda0.value_or(std::nan(""))));
  o.check(r.seconds < 900.0, "time=" + num(r.seconds) + "s<900s");
  // Reported, not asserted.
  o.detail += "; (EF-AF I_d=" + num(r.correlation.id_observed) +
              " shuffled=" + num(r.correlation.shuffled_mean) + " Z=" + num(r.correlation.z_score) +
              " P=" + num(r.correlation.p_value) + ")";
  return o;
}

bool marginals_preserved(const Matrix& a, const Matrix& b, const idcorr::CorrelationConfig& cfg) {
  for (std::size_t k = 0; k < cfg.n_shuffles; ++k) {
    const idcorr::PointCloud s = idcorr::shuffle_concat(a, b, idcorr::shuffle_seed(cfg.seed, k));
    for (std::size_t c = 0; c < a.cols; ++c) {
      if (s.column(c) != a.column(c)) return false;
    }
    for (std::size_t c = 0; c < b.cols; ++c) {
      auto got = s.column(a.cols + c);
      auto want = b.column(c);
      std::sort(got.begin(), got.end());
      std::sort(want.begin(), want.end());
      if (got != want) return false;
    }
  }
  return true;
}

Outcome correlation_soundness() {
  Outcome o;
  bool marginals = true;

  const std::size_t n = 2000;
  const Matrix a(n, 2, testutil::uniform(2 * n, 1));
  const auto noise = testutil::uniform(2 * n, 2, -0.01, 0.01);
  Matrix b(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    b(i, 0) = std::sin(3.0 * a(i, 0)) * std::cos(2.0 * a(i, 1)) + noise[2 * i];
    b(i, 1) = a(i, 0) * a(i, 0) + std::exp(a(i, 1)) + noise[2 * i + 1];
  }
  idcorr::CorrelationConfig cfg;
  cfg.seed = 3;
  const idcorr::CorrelationReport dep = idcorr::correlate(a, b, cfg);
  o.check(dep.p_value < 1e-3, "dependent P=" + num(dep.p_value) + "<1e-3");
  marginals = marginals && marginals_preserved(a, b, cfg);

  std::size_t quiet = 0;
  const std::size_t reps = 50;
  for (std::size_t s = 0; s < reps; ++s) {
    const Matrix ia(1000, 2, testutil::uniform(2000, 10000 + 2 * s));
    const Matrix ib(1000, 2, testutil::uniform(2000, 10001 + 2 * s));
    idcorr::CorrelationConfig c;
    c.seed = 20000 + s;
    const idcorr::CorrelationReport r = idcorr::correlate(ia, ib, c);
    if (r.p_value > 0.05) ++quiet;
    marginals = marginals && marginals_preserved(ia, ib, c);
  }
  o.check(quiet * 10 >= reps * 8,
          "independent P>0.05 in " + std::to_string(quiet) + "/" + std::to_string(reps));
  o.check(marginals, "marginals preserved in all shuffles");
  return o;
}

std::vector<unsigned char> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path write_bytes(const fs::path& p, const std::vector<unsigned char>& b) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  return p;
}

template <class Ex, class F>
bool rejects(F&& f) {
  try {
    f();
  } catch (const Ex&) {
    return true;
  } catch (...) {
    return false;
  }
  return false;
}

Outcome formats() {
  Outcome o;
  testutil::TempDir dir("accept_formats");

  masks::MaskSet set;
  set.kind = masks::MaskKind::kAdversarial;
  set.shape = Shape3{3, 5, 4};
  const auto vals = testutil::uniform(7 * set.dim(), 1);
  set.values.assign(vals.begin(), vals.end());
  for (std::uint64_t i = 0; i < 7; ++i) {
    set.image_ids.push_back(i * 3 + 1);
    set.target_labels.push_back(static_cast<int>(i % 4));
    set.true_labels.push_back(static_cast<int>((i + 1) % 4));
    set.final_losses.push_back(0.1 * static_cast<double>(i) + 1e-17);
    set.densities.push_back(static_cast<double>(i) / 7.0);
    set.preserved.push_back(static_cast<std::uint8_t>(i % 2));
  }
  set.attack = {{"name", "pgd"}, {"epsilon", 0.05}};
  masks::save_mask_set(set, dir / "set.fmsk");
  const masks::MaskSet back = masks::load_mask_set(dir / "set.fmsk");
  bool same = back.values.size() == set.values.size();
  for (std::size_t i = 0; same && i < set.values.size(); ++i) {
    same = std::bit_cast<std::uint32_t>(back.values[i]) == std::bit_cast<std::uint32_t>(set.values[i]);
  }
  same = same && back.image_ids == set.image_ids && back.target_labels == set.target_labels &&
         back.true_labels == set.true_labels && back.final_losses == set.final_losses &&
         back.densities == set.densities && back.preserved == set.preserved &&
         back.attack == set.attack && back.kind == set.kind && back.shape == set.shape;
  masks::save_mask_set(back, dir / "set2.fmsk");
  same = same && read_bytes(dir / "set.fmsk") == read_bytes(dir / "set2.fmsk");
  o.check(same, "mask set roundtrip");

  const model::Classifier m = model::Classifier::initialized(Shape3{2, 3, 3}, {5}, 3, 4);
  model::save_classifier(m, dir / "m.fbck");
  const model::Classifier mb = model::load_classifier(dir / "m.fbck");
  bool ck = mb.parameters().size() == m.parameters().size() && mb.widths() == m.widths();
  for (std::size_t i = 0; ck && i < m.parameters().size(); ++i) {
    ck = std::bit_cast<std::uint64_t>(mb.parameters()[i]) ==
         std::bit_cast<std::uint64_t>(m.parameters()[i]);
  }
  o.check(ck, "checkpoint roundtrip");

  std::vector<unsigned char> cifar;
  for (std::size_t r = 0; r < 2; ++r) {
    cifar.push_back(static_cast<unsigned char>(3 + 5 * r));
    for (std::size_t p = 0; p < 3072; ++p) cifar.push_back(static_cast<unsigned char>((p + 97 * r) % 256));
  }
  const ImageBatch cb = data::load_cifar10(write_bytes(dir / "c.bin", cifar));
  bool cf = cb.size() == 2 && cb.labels == std::vector<int>{3, 8} && cb.shape == Shape3{3, 32, 32};
  for (std::size_t r = 0; cf && r < 2; ++r) {
    for (std::size_t p = 0; cf && p < 3072; ++p) {
      cf = cb.image(r)[p] == static_cast<double>((p + 97 * r) % 256) / 255.0;
    }
  }
  o.check(cf, "CIFAR fixture exact");

  const auto mbytes = read_bytes(dir / "set.fmsk");
  auto bad = mbytes;
  bad[0] = 'X';
  bool rej = rejects<BadMagicError>([&] { masks::load_mask_set(write_bytes(dir / "b1", bad)); });
  bad = mbytes;
  bad[4] = 3;
  rej = rej && rejects<VersionError>([&] { masks::load_mask_set(write_bytes(dir / "b2", bad)); });
  bad = mbytes;
  bad.resize(100);
  rej = rej &&
        rejects<LengthMismatchError>([&] { masks::load_mask_set(write_bytes(dir / "b3", bad)); });
  const auto cbytes = read_bytes(dir / "m.fbck");
  auto cbad = cbytes;
  cbad.resize(cbytes.size() - 9);
  rej = rej &&
        rejects<LengthMismatchError>([&] { model::load_classifier(write_bytes(dir / "b4", cbad)); });
  cifar.pop_back();
  rej = rej && rejects<LengthMismatchError>([&] { data::parse_cifar10(cifar); });
  // A rejected save leaves nothing behind.
  masks::MaskSet broken = set;
  broken.densities.pop_back();
  rej = rej && rejects<ShapeError>([&] { masks::save_mask_set(broken, dir / "broken.fmsk"); });
  rej = rej && !fs::exists(dir / "broken.fmsk") && !fs::exists(dir / "broken.fmsk.partial");
  o.check(rej, "malformed inputs rejected, no partial files");
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"1 spiral benchmark", spiral_benchmark},
      {"2 z-test reference rows", z_test_rows},
      {"3 TwoNN validity sweep", twonn_sweep},
      {"4 gradient suite", gradient_suite},
      {"5 end-to-end pipeline", pipeline},
      {"6 correlation soundness", correlation_soundness},
      {"7 format suite", formats},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %s: %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
