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

#include "freqbias/tensor.hpp"

#include "freqbias/error.hpp"

namespace freqbias {

std::string Shape3::str() const {
  return "(" + std::to_string(channels) + ", " + std::to_string(height) + ", " +
         std::to_string(width) + ")";
}

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != rows * cols) {
    throw ShapeError("matrix data has " + std::to_string(data.size()) + " values, expected " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = (*this)(r, c);
  return out;
}

void ImageBatch::push_back(std::span<const double> img, int label) {
  if (img.size() != shape.size()) {
    throw ShapeError("image has " + std::to_string(img.size()) + " values, batch shape is " +
                     shape.str());
  }
  pixels.insert(pixels.end(), img.begin(), img.end());
  labels.push_back(label);
}

ImageBatch ImageBatch::select(std::span<const std::size_t> indices) const {
  ImageBatch out(shape);
  out.pixels.reserve(indices.size() * shape.size());
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(image(i), labels.at(i));
  return out;
}

void ImageBatch::validate() const {
  if (shape.size() == 0) throw ShapeError("image batch has an empty shape");
  if (pixels.size() != labels.size() * shape.size()) {
    throw ShapeError("image batch holds " + std::to_string(pixels.size()) + " pixels for " +
                     std::to_string(labels.size()) + " images of shape " + shape.str());
  }
}

}  // namespace freqbias
