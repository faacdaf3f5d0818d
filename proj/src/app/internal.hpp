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

#include <filesystem>
#include <string>

#include "json.hpp"

#include "freqbias/app.hpp"
#include "freqbias/attacks.hpp"
#include "freqbias/data.hpp"
#include "freqbias/masks.hpp"
#include "freqbias/model.hpp"

namespace freqbias::app {

inline constexpr const char* kTrainImages = "train.fimg";
inline constexpr const char* kTestImages = "test.fimg";
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kModelFile = "model.fbck";
inline constexpr const char* kTrainReport = "train_report.json";
inline constexpr const char* kAdversarialImages = "adversarial.fimg";
inline constexpr const char* kAdversarialSidecar = "adversarial.json";
inline constexpr const char* kEssentialMasks = "masks_ef.fmsk";
inline constexpr const char* kAdversarialMasks = "masks_af.fmsk";
inline constexpr const char* kControlMasks = "masks_ef_lambda0.fmsk";
inline constexpr const char* kCorrelationReport = "correlation.json";
inline constexpr const char* kSpiralCsv = "spiral_demo.csv";
inline constexpr const char* kSpiralSvg = "spiral_demo.svg";
inline constexpr const char* kSpiralPoints = "spiral_points.csv";
inline constexpr const char* kSummaryCsv = "summary.csv";
inline constexpr const char* kDensitySvg = "mask_densities.svg";
inline constexpr const char* kPipelineReport = "pipeline_report.json";
inline constexpr const char* kStatus = "status.json";

data::SpectralDatasetConfig dataset_config(const RunConfig& c);
model::TrainConfig train_config(const RunConfig& c);
attacks::AttackConfig attack_config(const RunConfig& c);
masks::MaskTrainConfig mask_config(const RunConfig& c);
idcorr::CorrelationConfig correlation_config(const RunConfig& c);

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);
std::string fmt(double v);

void save_adversarial(const attacks::AdversarialBatch& adv, const std::filesystem::path& dir,
                      const nlohmann::json& run_config);
attacks::AdversarialBatch load_adversarial(const std::filesystem::path& images_path);

}  // namespace freqbias::app
