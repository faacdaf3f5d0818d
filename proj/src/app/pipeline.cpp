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

#include <limits>
#include <algorithm>
#include <chrono>
#include <numeric>

#include "freqbias/app.hpp"
#include "freqbias/error.hpp"
#include "freqbias/svg.hpp"
#include "internal.hpp"

namespace freqbias::app {

namespace fs = std::filesystem;

namespace {

class StatusFile {
 public:
  StatusFile(fs::path path, nlohmann::json run) : path_(std::move(path)) {
    status_ = {{"stages", nlohmann::json::array()}, {"complete", false}, {"run_config", run}};
    write_json(path_, status_);
  }

  void stage(const std::string& name, nlohmann::json detail) {
    detail["stage"] = name;
    status_["stages"].push_back(std::move(detail));
    write_json(path_, status_);
  }

  void fail(const std::string& what) {
    status_["error"] = what;
    write_json(path_, status_);
  }

  void done() {
    status_["complete"] = true;
    write_json(path_, status_);
  }

 private:
  fs::path path_;
  nlohmann::json status_;
};

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Mean mask value on each mask's own class signature divided by the mean on
// every other bin, pooled over the set.
double signature_mass_ratio(const masks::MaskSet& set,
                            const std::vector<std::vector<data::FrequencyBin>>& signatures) {
  const Shape3& s = set.shape;
  double on = 0.0;
  double off = 0.0;
  std::size_t n_on = 0;
  std::size_t n_off = 0;
  std::vector<std::uint8_t> flag(s.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    std::fill(flag.begin(), flag.end(), 0);
    for (const auto& b : signatures.at(static_cast<std::size_t>(set.target_labels[i]))) {
      flag[b.channel * s.plane() + b.u * s.width + b.v] = 1;
    }
    const auto m = set.mask(i);
    for (std::size_t k = 0; k < m.size(); ++k) {
      if (flag[k]) {
        on += m[k];
        ++n_on;
      } else {
        off += m[k];
        ++n_off;
      }
    }
  }
  if (n_on == 0 || n_off == 0) return 0.0;
  const double off_mean = off / static_cast<double>(n_off);
  const double on_mean = on / static_cast<double>(n_on);
  if (off_mean == 0.0) return on_mean > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return on_mean / off_mean;
}

std::string mean_pm_std(double m, double s) { return fmt(m) + "+-" + fmt(s); }

PipelineResult run_stages(const RunConfig& config, const fs::path& out, StatusFile& status) {
  const auto start = std::chrono::steady_clock::now();
  const nlohmann::json run = config.to_json();
  const nlohmann::json meta = {{"run_config", run}};
  const std::size_t workers = config.workers();
  PipelineResult result;

  // Data.
  const auto dc = dataset_config(config);
  const data::SpectralDataset ds = data::gen_spectral_dataset(dc);
  const fs::path data_dir = out / "dataset";
  fs::create_directories(data_dir);
  data::save_image_batch(ds.train, data_dir / kTrainImages, meta.dump());
  data::save_image_batch(ds.test, data_dir / kTestImages, meta.dump());
  status.stage("gen-data", {{"n_train", ds.train.size()}, {"n_test", ds.test.size()}});

  // Classifier.
  model::TrainResult tr = model::train_classifier(ds.train, ds.test, dc.classes, train_config(config));
  model::save_classifier(tr.model, out / kModelFile, meta.dump());
  result.train_accuracy = tr.train_accuracy;
  result.test_accuracy = tr.test_accuracy;
  write_json(out / kTrainReport, {{"train_accuracy", tr.train_accuracy},
                                  {"test_accuracy", tr.test_accuracy},
                                  {"epoch_losses", tr.epoch_losses},
                                  {"warnings", tr.warnings},
                                  {"checksum", tr.model.checksum()},
                                  {"run_config", run}});
  status.stage("train-model",
               {{"train_accuracy", tr.train_accuracy}, {"test_accuracy", tr.test_accuracy}});
  const model::Classifier& clf = tr.model;

  // Attack the correctly classified test images.
  const Matrix logits = model::forward(clf, ds.test);
  std::vector<std::size_t> correct;
  for (std::size_t i = 0; i < ds.test.size(); ++i) {
    if (model::argmax(logits.row(i)) == ds.test.labels[i]) correct.push_back(i);
  }
  result.correctly_classified = correct.size();
  if (correct.empty()) throw EmptySetError("classifier got every test image wrong");
  const ImageBatch subset = ds.test.select(correct);
  const auto ac = attack_config(config);
  const std::string attack_name = config.get_string("attack", "pgd");
  attacks::AdversarialBatch adv;
  if (attack_name == "pgd") {
    adv = attacks::pgd_linf(clf, subset, ac, workers, correct);
  } else if (attack_name == "min_norm") {
    adv = attacks::min_norm_linf(clf, subset, ac, workers, correct);
  } else {
    throw InvalidArgument("attack must be 'pgd' or 'min_norm'");
  }
  save_adversarial(adv, out, run);
  result.attack_success_rate = adv.success_rate();
  status.stage("attack", {{"attack", attack_name},
                          {"attacked", adv.size()},
                          {"success_rate", adv.success_rate()}});

  // Masks.
  const auto mc = mask_config(config);
  masks::MaskSet ef = masks::train_essential_masks(clf, ds.test, mc, workers);
  masks::MaskSet af = masks::train_adversarial_masks(clf, adv, ds.test, mc, workers);
  ef.config["run_config"] = run;
  af.config["run_config"] = run;
  result.ef_count = ef.size();
  result.af_count = af.size();
  result.ef_preserved = ef.preserved_fraction();
  result.af_preserved = af.preserved_fraction();
  result.ef_density = mean(ef.densities);
  result.af_density = mean(af.densities);
  result.signature_mass_ratio = signature_mass_ratio(ef, ds.signatures);
  status.stage("train-masks", {{"ef", ef.size()},
                               {"af", af.size()},
                               {"ef_preserved", result.ef_preserved},
                               {"af_preserved", result.af_preserved}});

  if (config.get_bool("control_lambda0", true)) {
    masks::MaskTrainConfig control = mc;
    control.lambda = 0.0;
    masks::MaskSet ef0 = masks::train_essential_masks(clf, ds.test, control, workers);
    ef0.config["run_config"] = run;
    masks::save_mask_set(ef0, out / kControlMasks);
    result.ef_density_lambda0 = mean(ef0.densities);
    status.stage("control-lambda0", {{"ef_density_lambda0", *result.ef_density_lambda0}});
  }

  auto [ef_aligned, af_aligned] = masks::align_mask_sets(ef, af);
  result.aligned_count = ef_aligned.size();
  masks::save_mask_set(ef_aligned, out / kEssentialMasks);
  masks::save_mask_set(af_aligned, out / kAdversarialMasks);
  status.stage("align", {{"aligned", ef_aligned.size()}});

  // Correlation between the aligned EF and AF masks.
  result.correlation =
      idcorr::correlate(ef_aligned.to_matrix(), af_aligned.to_matrix(), correlation_config(config));
  nlohmann::json cj = result.correlation.to_json();
  cj["run_config"] = run;
  write_json(out / kCorrelationReport, cj);
  status.stage("correlate",
               {{"z", result.correlation.z_score}, {"p", result.correlation.p_value}});

  const auto& c = result.correlation;
  const std::string cosine = c.cosine ? mean_pm_std(c.cosine->mean, c.cosine->std) : "nan";
  std::vector<std::size_t> hidden = config.get_sizes("hidden", train_config(config).hidden);
  std::string model_name = "mlp";
  for (std::size_t h : hidden) model_name += "-" + std::to_string(h);
  write_text(out / kSummaryCsv, "# run_config: " + run.dump() +
                                    "\nattack,model,cosine_sim,I_d,I_d_shuffle,Z,P\n" +
                                    attack_name + "," + model_name + "," + cosine + "," +
                                    fmt(c.id_observed) + "," +
                                    mean_pm_std(c.shuffled_mean, c.shuffled_std) + "," +
                                    fmt(c.z_score) + "," + fmt(c.p_value) + "\n");

  std::vector<svg::HistogramSeries> series{{"EF lambda=" + fmt(mc.lambda), ef.densities},
                                           {"AF lambda=" + fmt(mc.lambda), af.densities}};
  write_text(out / kDensitySvg, svg::histogram(series, 0.0, 1.0, 20, "run_config: " + run.dump()));

  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  nlohmann::json report = {{"train_accuracy", result.train_accuracy},
                           {"test_accuracy", result.test_accuracy},
                           {"correctly_classified", result.correctly_classified},
                           {"attack", attack_name},
                           {"attack_success_rate", result.attack_success_rate},
                           {"ef_count", result.ef_count},
                           {"af_count", result.af_count},
                           {"aligned_count", result.aligned_count},
                           {"ef_preserved", result.ef_preserved},
                           {"af_preserved", result.af_preserved},
                           {"ef_density", result.ef_density},
                           {"af_density", result.af_density},
                           {"ef_density_lambda0", nullptr},
                           {"signature_mass_ratio", result.signature_mass_ratio},
                           {"correlation", cj},
                           {"seconds", result.seconds},
                           {"run_config", run}};
  if (result.ef_density_lambda0) report["ef_density_lambda0"] = *result.ef_density_lambda0;
  write_json(out / kPipelineReport, report);
  return result;
}

}  // namespace

PipelineResult run_pipeline(const RunConfig& config, const fs::path& out) {
  fs::create_directories(out);
  StatusFile status(out / kStatus, config.to_json());
  try {
    PipelineResult result = run_stages(config, out, status);
    status.done();
    return result;
  } catch (const std::exception& e) {
    status.fail(e.what());
    throw;
  }
}

}  // namespace freqbias::app
