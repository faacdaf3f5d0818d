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

#include <span>
#include <string>
#include <vector>

namespace freqbias::svg {

struct ScatterPanel {
  std::string title;
  std::vector<double> xs;
  std::vector<double> ys;
};

/// Panels side by side; `comment` goes into an XML comment at the top.
std::string scatter(std::span<const ScatterPanel> panels, const std::string& comment = "");

struct HistogramSeries {
  std::string name;
  std::vector<double> values;
};

/// Overlaid histograms over [lo, hi] with `bins` equal-width bins.
std::string histogram(std::span<const HistogramSeries> series, double lo, double hi,
                      std::size_t bins, const std::string& comment = "");

}  // namespace freqbias::svg
