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

#include "freqbias/spectral.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include "freqbias/error.hpp"

namespace freqbias::spectral {
namespace {

void radix2(Complex* data, std::size_t n, std::size_t stride, bool inverse) {
  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i * stride], data[j * stride]);
  }
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    for (std::size_t k = 0; k < half; ++k) {
      const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k) /
                           static_cast<double>(len);
      const Complex w(std::cos(angle), std::sin(angle));
      for (std::size_t start = 0; start < n; start += len) {
        Complex& lo = data[(start + k) * stride];
        Complex& hi = data[(start + k + half) * stride];
        const Complex t = w * hi;
        hi = lo - t;
        lo = lo + t;
      }
    }
  }
}

void direct(Complex* data, std::size_t n, std::size_t stride, bool inverse) {
  const double sign = inverse ? 1.0 : -1.0;
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      // (k*t) mod n keeps the angle small for accuracy.
      const double angle = sign * 2.0 * std::numbers::pi *
                           static_cast<double>((k * t) % n) / static_cast<double>(n);
      acc += data[t * stride] * Complex(std::cos(angle), std::sin(angle));
    }
    out[k] = acc;
  }
  for (std::size_t k = 0; k < n; ++k) data[k * stride] = out[k];
}

void transform_2d(ComplexGrid& grid, bool inverse) {
  for (std::size_t r = 0; r < grid.rows; ++r) {
    dft_1d(grid.values.data() + r * grid.cols, grid.cols, 1, inverse);
  }
  for (std::size_t c = 0; c < grid.cols; ++c) {
    dft_1d(grid.values.data() + c, grid.rows, grid.cols, inverse);
  }
}

void check_shape(std::size_t got, Shape3 shape, const char* what) {
  if (got != shape.size()) {
    throw ShapeError(std::string(what) + " has " + std::to_string(got) +
                     " values, expected shape " + shape.str());
  }
}

}  // namespace

ComplexGrid ComplexGrid::from_real(std::span<const double> channel, std::size_t rows,
                                   std::size_t cols) {
  if (channel.size() != rows * cols) {
    throw ShapeError("channel has " + std::to_string(channel.size()) + " values, expected " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
  ComplexGrid grid(rows, cols);
  for (std::size_t i = 0; i < channel.size(); ++i) grid.values[i] = channel[i];
  return grid;
}

SpectralMask SpectralMask::filled(Shape3 shape, double value) {
  return SpectralMask{shape, std::vector<double>(shape.size(), value)};
}

void SpectralMask::validate() const {
  check_shape(values.size(), shape, "mask");
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("mask entry outside [0,1]");
  }
}

void dft_1d(Complex* data, std::size_t n, std::size_t stride, bool inverse) {
  if (n <= 1) return;
  if (std::has_single_bit(n)) {
    radix2(data, n, stride, inverse);
  } else {
    direct(data, n, stride, inverse);
  }
}

ComplexGrid fft2(const ComplexGrid& grid) {
  if (grid.rows == 0 || grid.cols == 0) throw ShapeError("fft2 of an empty grid");
  ComplexGrid out = grid;
  transform_2d(out, false);
  return out;
}

ComplexGrid fft2(std::span<const double> channel, std::size_t rows, std::size_t cols) {
  return fft2(ComplexGrid::from_real(channel, rows, cols));
}

ComplexGrid ifft2(const ComplexGrid& grid) {
  if (grid.rows == 0 || grid.cols == 0) throw ShapeError("ifft2 of an empty grid");
  ComplexGrid out = grid;
  transform_2d(out, true);
  const double scale = 1.0 / static_cast<double>(grid.rows * grid.cols);
  for (Complex& v : out.values) v *= scale;
  return out;
}

std::vector<double> apply_mask(std::span<const double> image, const SpectralMask& mask) {
  mask.validate();
  check_shape(image.size(), mask.shape, "image");
  return SpectralFilter(image, mask.shape).apply(mask.values);
}

std::vector<double> mask_gradient(std::span<const double> image, Shape3 shape,
                                  std::span<const double> upstream) {
  return SpectralFilter(image, shape).gradient(upstream);
}

SpectralFilter::SpectralFilter(std::span<const double> image, Shape3 shape) : shape_(shape) {
  check_shape(image.size(), shape, "image");
  spectrum_.reserve(shape.channels);
  for (std::size_t c = 0; c < shape.channels; ++c) {
    spectrum_.push_back(fft2(image.subspan(c * shape.plane(), shape.plane()), shape.height,
                             shape.width));
  }
}

std::vector<double> SpectralFilter::apply(std::span<const double> mask) const {
  check_shape(mask.size(), shape_, "mask");
  const std::size_t plane = shape_.plane();
  std::vector<double> out(shape_.size());
  for (std::size_t c = 0; c < shape_.channels; ++c) {
    ComplexGrid filtered = spectrum_[c];
    for (std::size_t k = 0; k < plane; ++k) filtered.values[k] *= mask[c * plane + k];
    const ComplexGrid back = ifft2(filtered);
    for (std::size_t k = 0; k < plane; ++k) out[c * plane + k] = back.values[k].real();
  }
  return out;
}

// d/dM_k sum_n u_n Re(ifft(M.X)_n) = Re(X_k * ifft(u)_k) = Re(X_k * conj(fft(u)_k)) / (HW)
// for real u.
std::vector<double> SpectralFilter::gradient(std::span<const double> upstream) const {
  check_shape(upstream.size(), shape_, "upstream gradient");
  const std::size_t plane = shape_.plane();
  const double scale = 1.0 / static_cast<double>(plane);
  std::vector<double> grad(shape_.size());
  for (std::size_t c = 0; c < shape_.channels; ++c) {
    const ComplexGrid u = fft2(upstream.subspan(c * plane, plane), shape_.height, shape_.width);
    for (std::size_t k = 0; k < plane; ++k) {
      grad[c * plane + k] = (spectrum_[c].values[k] * std::conj(u.values[k])).real() * scale;
    }
  }
  return grad;
}

}  // namespace freqbias::spectral
