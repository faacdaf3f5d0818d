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

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "freqbias/app.hpp"
#include "internal.hpp"
#include "freqbias/binary_io.hpp"
#include "freqbias/data.hpp"
#include "freqbias/error.hpp"
#include "freqbias/masks.hpp"
#include "freqbias/model.hpp"
#include "freqbias/svg.hpp"

namespace freqbias::app {

namespace fs = std::filesystem;

data::SpectralDatasetConfig dataset_config(const RunConfig& c) {
  data::SpectralDatasetConfig d;
  d.n_train = static_cast<std::size_t>(c.get_int("n_train", 500));
  d.n_test = static_cast<std::size_t>(c.get_int("n_test", 200));
  d.classes = static_cast<std::size_t>(c.get_int("classes", 4));
  const auto shape = c.get_sizes("shape", {1, 16, 16});
  if (shape.size() != 3) throw InvalidArgument("shape expects C,H,W");
  d.shape = Shape3{shape[0], shape[1], shape[2]};
  d.bins_per_class = static_cast<std::size_t>(c.get_int("bins_per_class", 2));
  d.amplitude = c.get_double("amplitude", d.amplitude);
  d.noise_std = c.get_double("noise_std", d.noise_std);
  d.phase_jitter = c.get_double("phase_jitter", d.phase_jitter);
  d.seed = c.seed();
  return d;
}

model::TrainConfig train_config(const RunConfig& c) {
  model::TrainConfig t;
  t.epochs = static_cast<std::size_t>(c.get_int("epochs", static_cast<std::int64_t>(t.epochs)));
  t.batch_size =
      static_cast<std::size_t>(c.get_int("batch_size", static_cast<std::int64_t>(t.batch_size)));
  t.learning_rate = c.get_double("model_lr", t.learning_rate);
  t.hidden = c.get_sizes("hidden", t.hidden);
  t.seed = c.seed() + 1;
  return t;
}

attacks::AttackConfig attack_config(const RunConfig& c) {
  attacks::AttackConfig a;
  a.epsilon = c.get_double("epsilon", 0.05);
  a.steps = static_cast<int>(c.get_int("steps", a.steps));
  a.step_size = c.get_double("step_size", a.step_size);
  a.epsilon_max = c.get_double("epsilon_max", a.epsilon_max);
  a.grid_points = static_cast<int>(c.get_int("grid_points", a.grid_points));
  a.bisection_tolerance = c.get_double("bisection_tolerance", a.bisection_tolerance);
  a.random_start = c.get_bool("random_start", a.random_start);
  a.seed = c.seed() + 2;
  return a;
}

masks::MaskTrainConfig mask_config(const RunConfig& c) {
  masks::MaskTrainConfig m;
  m.lambda = c.get_double("lambda", m.lambda);
  m.learning_rate = c.get_double("mask_lr", m.learning_rate);
  m.min_steps = static_cast<int>(c.get_int("min_steps", m.min_steps));
  m.max_steps = static_cast<int>(c.get_int("max_steps", m.max_steps));
  m.window = static_cast<int>(c.get_int("window", m.window));
  m.tolerance = c.get_double("tolerance", m.tolerance);
  m.seed = c.seed();
  return m;
}

idcorr::CorrelationConfig correlation_config(const RunConfig& c) {
  idcorr::CorrelationConfig k;
  k.n_shuffles = static_cast<std::size_t>(c.get_int("shuffles", 50));
  k.discard_fraction = c.get_double("discard", k.discard_fraction);
  const std::string method = c.get_string("id_method", "mle");
  if (method == "mle") {
    k.method = idcorr::TwoNNMethod::kMaximumLikelihood;
  } else if (method == "linear_fit") {
    k.method = idcorr::TwoNNMethod::kLinearFit;
  } else {
    throw InvalidArgument("id_method must be 'mle' or 'linear_fit'");
  }
  k.seed = c.seed() + 3;
  k.workers = c.workers();
  return k;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

fs::path prepare_out(const fs::path& out) {
  fs::create_directories(out);
  return out;
}

void save_adversarial(const attacks::AdversarialBatch& adv, const fs::path& dir,
                      const nlohmann::json& run_config) {
  const nlohmann::json meta = {{"run_config", run_config}};
  data::save_image_batch(adv.images, dir / kAdversarialImages, meta.dump());
  nlohmann::json side = {{"attack", adv.attack},
                         {"config",
                          {{"epsilon", adv.config.epsilon},
                           {"steps", adv.config.steps},
                           {"step_size", adv.config.effective_step_size(adv.config.epsilon)},
                           {"epsilon_max", adv.config.epsilon_max},
                           {"grid_points", adv.config.grid_points},
                           {"bisection_tolerance", adv.config.bisection_tolerance},
                           {"random_start", adv.config.random_start},
                           {"seed", adv.config.seed}}},
                         {"source_ids", adv.source_ids},
                         {"original_labels", adv.original_labels},
                         {"adversarial_labels", adv.adversarial_labels},
                         {"success", adv.success},
                         {"linf_norms", adv.linf_norms},
                         {"success_rate", adv.success_rate()},
                         {"run_config", run_config}};
  write_json(dir / kAdversarialSidecar, side);
}

attacks::AdversarialBatch load_adversarial(const fs::path& images_path) {
  fs::path sidecar = images_path;
  sidecar.replace_extension(".json");
  const nlohmann::json side = read_json(sidecar);
  attacks::AdversarialBatch adv;
  adv.images = data::load_image_batch(images_path);
  try {
    adv.attack = side.at("attack").get<std::string>();
    const auto& cfg = side.at("config");
    adv.config.epsilon = cfg.at("epsilon").get<double>();
    adv.config.steps = cfg.at("steps").get<int>();
    adv.config.step_size = cfg.at("step_size").get<double>();
    adv.config.epsilon_max = cfg.at("epsilon_max").get<double>();
    adv.config.grid_points = cfg.at("grid_points").get<int>();
    adv.config.bisection_tolerance = cfg.at("bisection_tolerance").get<double>();
    adv.config.random_start = cfg.at("random_start").get<bool>();
    adv.config.seed = cfg.at("seed").get<std::uint64_t>();
    adv.source_ids = side.at("source_ids").get<std::vector<std::size_t>>();
    adv.original_labels = side.at("original_labels").get<std::vector<int>>();
    adv.adversarial_labels = side.at("adversarial_labels").get<std::vector<int>>();
    adv.success = side.at("success").get<std::vector<bool>>();
    adv.linf_norms = side.at("linf_norms").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(sidecar.string() + ": " + e.what());
  }
  const std::size_t n = adv.images.size();
  if (adv.source_ids.size() != n || adv.original_labels.size() != n ||
      adv.adversarial_labels.size() != n || adv.success.size() != n || adv.linf_norms.size() != n) {
    throw LengthMismatchError(sidecar.string() + ": sidecar does not match the image batch");
  }
  return adv;
}

void cmd_gen_data(const RunConfig& config, const fs::path& out) {
  prepare_out(out);
  const auto dc = dataset_config(config);
  const data::SpectralDataset ds = data::gen_spectral_dataset(dc);
  const nlohmann::json run = config.to_json();
  const nlohmann::json meta = {{"run_config", run}};
  data::save_image_batch(ds.train, out / kTrainImages, meta.dump());
  data::save_image_batch(ds.test, out / kTestImages, meta.dump());
  nlohmann::json sig = nlohmann::json::array();
  for (const auto& cls : ds.signatures) {
    nlohmann::json bins = nlohmann::json::array();
    for (const auto& b : cls) bins.push_back({b.channel, b.u, b.v});
    sig.push_back(bins);
  }
  write_json(out / kManifest, {{"dataset", dc.to_json()},
                               {"signatures_with_conjugates", sig},
                               {"files", {{"train", kTrainImages}, {"test", kTestImages}}},
                               {"run_config", run}});
}

void cmd_train_model(const RunConfig& config, const fs::path& out) {
  prepare_out(out);
  const fs::path data_dir = config.get_string("data", "");
  if (data_dir.empty()) throw InvalidArgument("train-model needs --data DIR");
  const ImageBatch train = data::load_image_batch(data_dir / kTrainImages);
  const ImageBatch test = data::load_image_batch(data_dir / kTestImages);
  std::size_t classes = static_cast<std::size_t>(config.get_int("classes", 0));
  if (classes == 0) {
    for (int y : train.labels) classes = std::max(classes, static_cast<std::size_t>(y) + 1);
  }
  const auto tc = train_config(config);
  model::TrainResult tr = model::train_classifier(train, test, classes, tc);
  const nlohmann::json run = config.to_json();
  model::save_classifier(tr.model, out / kModelFile, nlohmann::json({{"run_config", run}}).dump());
  write_json(out / kTrainReport, {{"train_accuracy", tr.train_accuracy},
                                  {"test_accuracy", tr.test_accuracy},
                                  {"epoch_losses", tr.epoch_losses},
                                  {"warnings", tr.warnings},
                                  {"checksum", tr.model.checksum()},
                                  {"run_config", run}});
  for (const auto& w : tr.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

void cmd_attack(const RunConfig& config, const fs::path& out) {
  prepare_out(out);
  const fs::path model_path = config.get_string("model", "");
  const fs::path data_dir = config.get_string("data", "");
  if (model_path.empty() || data_dir.empty()) {
    throw InvalidArgument("attack needs --model FILE and --data DIR");
  }
  const model::Classifier clf = model::load_classifier(model_path);
  const ImageBatch test = data::load_image_batch(data_dir / kTestImages);
  const Matrix logits = model::forward(clf, test);
  std::vector<std::size_t> correct;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (model::argmax(logits.row(i)) == test.labels[i]) correct.push_back(i);
  }
  if (correct.empty()) throw EmptySetError("no correctly classified test images to attack");
  const ImageBatch subset = test.select(correct);
  const auto ac = attack_config(config);
  const std::string name = config.get_string("attack", "pgd");
  attacks::AdversarialBatch adv;
  if (name == "pgd") {
    adv = attacks::pgd_linf(clf, subset, ac, config.workers(), correct);
  } else if (name == "min_norm") {
    adv = attacks::min_norm_linf(clf, subset, ac, config.workers(), correct);
  } else {
    throw InvalidArgument("attack must be 'pgd' or 'min_norm'");
  }
  save_adversarial(adv, out, config.to_json());
  std::printf("attack %s: %zu/%zu successful (%.4f)\n", name.c_str(),
              static_cast<std::size_t>(std::count(adv.success.begin(), adv.success.end(), true)),
              adv.size(), adv.success_rate());
}

void cmd_train_masks(const RunConfig& config, const fs::path& out) {
  prepare_out(out);
  const fs::path model_path = config.get_string("model", "");
  const fs::path data_dir = config.get_string("data", "");
  if (model_path.empty() || data_dir.empty()) {
    throw InvalidArgument("train-masks needs --model FILE and --data DIR");
  }
  const std::string kind = config.get_string("kind", "ef");
  const model::Classifier clf = model::load_classifier(model_path);
  const ImageBatch test = data::load_image_batch(data_dir / kTestImages);
  auto mc = mask_config(config);
  masks::MaskSet set;
  fs::path target;
  if (kind == "ef") {
    set = masks::train_essential_masks(clf, test, mc, config.workers());
    target = out / kEssentialMasks;
  } else if (kind == "af") {
    const fs::path adv_path = config.get_string("adversarial", "");
    if (adv_path.empty()) {
      set = masks::train_mask_set(clf, test, masks::MaskKind::kAdversarial, attack_config(config),
                                  mc, config.workers(), config.get_string("attack", "pgd"));
    } else {
      set = masks::train_adversarial_masks(clf, load_adversarial(adv_path), test, mc,
                                           config.workers());
    }
    target = out / kAdversarialMasks;
  } else {
    throw InvalidArgument("kind must be 'ef' or 'af'");
  }
  set.config["run_config"] = config.to_json();
  masks::save_mask_set(set, target);
  std::printf("%s masks: %zu trained, %.4f preserve their target\n", kind.c_str(), set.size(),
              set.preserved_fraction());
}

Matrix load_matrix(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[4] = {0, 0, 0, 0};
  in.read(magic, 4);
  if (in.gcount() == 4 && std::string(magic, 4) == "FMSK") {
    return masks::load_mask_set(path).to_matrix();
  }
  return data::read_csv_matrix(path);
}

IdResult cmd_id(const RunConfig& config, const fs::path& input) {
  const Matrix m = load_matrix(input);
  const auto cc = correlation_config(config);
  const idcorr::TwoNNEstimate est =
      idcorr::twonn_estimate(m, cc.discard_fraction, cc.method, cc.workers);
  return {est.dimension, est.points, est.duplicates_removed};
}

idcorr::CorrelationReport cmd_correlate(const RunConfig& config, const fs::path& a,
                                        const fs::path& b, const fs::path& out) {
  prepare_out(out);
  Matrix ma;
  Matrix mb;
  nlohmann::json inputs = {{"a", a.filename().string()}, {"b", b.filename().string()}};
  auto is_mask_set = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    char magic[4] = {0, 0, 0, 0};
    in.read(magic, 4);
    return in.gcount() == 4 && std::string(magic, 4) == "FMSK";
  };
  if (is_mask_set(a) && is_mask_set(b)) {
    auto [sa, sb] = masks::align_mask_sets(masks::load_mask_set(a), masks::load_mask_set(b));
    ma = sa.to_matrix();
    mb = sb.to_matrix();
    inputs["aligned_images"] = sa.size();
  } else {
    ma = load_matrix(a);
    mb = load_matrix(b);
  }
  const idcorr::CorrelationReport report = idcorr::correlate(ma, mb, correlation_config(config));
  nlohmann::json j = report.to_json();
  j["inputs"] = inputs;
  j["run_config"] = config.to_json();
  write_json(out / kCorrelationReport, j);
  return report;
}

SpiralDemoResult run_spiral_demo(const RunConfig& config, const fs::path& out) {
  prepare_out(out);
  data::SpiralConfig sc;
  sc.n_points = static_cast<std::size_t>(config.get_int("n_points", 5000));
  sc.turns = config.get_double("turns", sc.turns);
  sc.radial_rate = config.get_double("radial_rate", sc.radial_rate);
  sc.noise_fraction = config.get_double("noise_fraction", sc.noise_fraction);
  sc.seed = config.seed();
  const Matrix points = data::gen_spiral(sc);
  const Matrix xs(points.rows, 1, points.column(0));
  const Matrix ys(points.rows, 1, points.column(1));

  SpiralDemoResult result;
  result.r2 = idcorr::pearson_r2(xs.data, ys.data);
  const auto cc = correlation_config(config);
  result.report = idcorr::correlate(xs, ys, cc);

  const nlohmann::json run = config.to_json();
  const std::string echo = "run_config: " + run.dump();
  result.csv_path = out / kSpiralCsv;
  write_text(result.csv_path, "# " + echo + "\nR2,I_d,I_d_shuffle_mean,I_d_shuffle_std,Z,P\n" +
                                  fmt(result.r2) + "," + fmt(result.report.id_observed) + "," +
                                  fmt(result.report.shuffled_mean) + "," +
                                  fmt(result.report.shuffled_std) + "," +
                                  fmt(result.report.z_score) + "," +
                                  fmt(result.report.p_value) + "\n");

  // One shuffled cloud for the figure and the marginal export: shuffle 0.
  const idcorr::PointCloud shuffled =
      idcorr::shuffle_concat(xs, ys, idcorr::shuffle_seed(cc.seed, 0));
  Matrix table(points.rows, 3);
  for (std::size_t i = 0; i < points.rows; ++i) {
    table(i, 0) = points(i, 0);
    table(i, 1) = points(i, 1);
    table(i, 2) = shuffled(i, 1);
  }
  const std::vector<std::string> header{"x", "y", "y_shuffled"};
  data::write_csv_matrix(table, out / kSpiralPoints, header, echo);

  const std::vector<svg::ScatterPanel> panels{
      {"original (I_d " + fmt(result.report.id_observed) + ")", points.column(0),
       points.column(1)},
      {"y shuffled (I_d " + fmt(result.report.shuffled_ids.front()) + ")", shuffled.column(0),
       shuffled.column(1)}};
  result.svg_path = out / kSpiralSvg;
  write_text(result.svg_path, svg::scatter(panels, echo));

  nlohmann::json j = result.report.to_json();
  j["r2"] = result.r2;
  j["spiral"] = sc.to_json();
  j["run_config"] = run;
  result.json_path = out / kCorrelationReport;
  write_json(result.json_path, j);
  return result;
}

}  // namespace freqbias::app
