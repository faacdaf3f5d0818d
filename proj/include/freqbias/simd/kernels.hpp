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

// Inner-loop kernels shared by the classifier and the neighbour search.
//
// Every variant reduces in the same order: four interleaved lane
// accumulators, folded as (l0 + l2) + (l1 + l3), then the tail added
// sequentially. With contraction disabled this makes the scalar and
// vector variants bitwise identical, so results never depend on the
// instruction set picked at runtime.

#include <cstddef>
#include <span>
#include <string_view>

namespace freqbias::simd {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  /// y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

const KernelTable& scalar_kernels();
/// nullptr when the variant was not compiled in.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

/// True if the variant is compiled in and the running CPU supports it.
bool isa_available(Isa isa);

/// Best available variant. FREQBIAS_ISA=scalar|avx2|neon in the environment
/// overrides the choice (falls back to scalar if the request is unavailable).
Isa detect_isa();

/// Table used by the convenience wrappers below.
const KernelTable& active_kernels();

/// Force a variant. Throws InvalidArgument if it is not available.
void select_isa(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active_kernels().dot(a.data(), b.data(), a.size());
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  return active_kernels().squared_distance(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active_kernels().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace freqbias::simd
