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

// 2D discrete Fourier transforms and the spectral mask operator
//
//   x_F = Re(ifft2(M .* fft2(x)))     (per channel)
//
// Convention: unnormalised forward transform, 1/(H*W) on the inverse.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "freqbias/tensor.hpp"

namespace freqbias::spectral {

using Complex = std::complex<double>;

/// One channel of Fourier (or complex pixel) values, row-major H x W.
struct ComplexGrid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Complex> values;

  ComplexGrid() = default;
  ComplexGrid(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c) {}

  Complex& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  const Complex& operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

  static ComplexGrid from_real(std::span<const double> channel, std::size_t rows,
                               std::size_t cols);
};

/// Per-entry [0,1] weights over the spectrum; same shape as the image.
struct SpectralMask {
  Shape3 shape;
  std::vector<double> values;

  static SpectralMask filled(Shape3 shape, double value);
  /// Throws ShapeError / InvalidArgument on wrong size or entries outside [0,1].
  void validate() const;
};

/// In-place 1D DFT of n values spaced `stride` apart. Radix-2 for powers of
/// two, direct O(n^2) summation otherwise. The inverse is unnormalised.
void dft_1d(Complex* data, std::size_t n, std::size_t stride, bool inverse);

ComplexGrid fft2(const ComplexGrid& grid);
ComplexGrid fft2(std::span<const double> channel, std::size_t rows, std::size_t cols);
ComplexGrid ifft2(const ComplexGrid& grid);

/// Filtered image. Not clipped back into [0,1].
std::vector<double> apply_mask(std::span<const double> image, const SpectralMask& mask);

/// Gradient of <apply_mask(image, M), upstream> with respect to M (the exact
/// adjoint of the map M -> apply_mask(image, M)). Independent of M.
std::vector<double> mask_gradient(std::span<const double> image, Shape3 shape,
                                  std::span<const double> upstream);

/// Caches the spectrum of one image so a mask can be applied and
/// differentiated repeatedly at the cost of one inverse / one forward FFT.
class SpectralFilter {
 public:
  SpectralFilter(std::span<const double> image, Shape3 shape);

  const Shape3& shape() const { return shape_; }
  const std::vector<ComplexGrid>& spectrum() const { return spectrum_; }

  std::vector<double> apply(std::span<const double> mask) const;
  std::vector<double> gradient(std::span<const double> upstream) const;

 private:
  Shape3 shape_;
  std::vector<ComplexGrid> spectrum_;
};

}  // namespace freqbias::spectral
