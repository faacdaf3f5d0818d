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

#include <vector>

#include "freqbias/data.hpp"
#include "freqbias/model.hpp"

namespace testutil {

struct TrainedSpectral {
  freqbias::data::SpectralDataset data;
  freqbias::model::TrainResult trained;
  std::vector<std::size_t> correct;  ///< test indices the model gets right
};

// Default synthetic dataset and classifier, built once per test binary.
inline const TrainedSpectral& trained_spectral() {
  static const TrainedSpectral fixture = [] {
    TrainedSpectral f;
    freqbias::data::SpectralDatasetConfig dc;
    dc.seed = 1;
    f.data = freqbias::data::gen_spectral_dataset(dc);
    freqbias::model::TrainConfig tc;
    tc.seed = 2;
    f.trained = freqbias::model::train_classifier(f.data.train, f.data.test, dc.classes, tc);
    for (std::size_t i = 0; i < f.data.test.size(); ++i) {
      if (freqbias::model::predict(f.trained.model, f.data.test.image(i)) ==
          f.data.test.labels[i]) {
        f.correct.push_back(i);
      }
    }
    return f;
  }();
  return fixture;
}

}  // namespace testutil
