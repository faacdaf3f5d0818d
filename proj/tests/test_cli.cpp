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

#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "freqbias/data.hpp"
#include "freqbias/masks.hpp"
#include "json.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string output;
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(FREQBIAS_CLI) + " " + args + " 2>&1";
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  std::array<char, 512> buf{};
  while (fgets(buf.data(), buf.size(), pipe) != nullptr) r.output += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json json_file(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

// Small but complete pipeline configuration.
const char* kSmallPipeline =
    "--set n_train=200 --set n_test=60 --set epochs=30 --set min_steps=100 "
    "--set max_steps=400 --shuffles 10 --epsilon 0.05 --seed 3";

}  // namespace

TEST(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("no-such-command").code, 2);
  EXPECT_EQ(run("spiral-demo --bogus").code, 2);
  EXPECT_EQ(run("spiral-demo --set novalue").code, 2);
  EXPECT_EQ(run("id").code, 2);
  testutil::TempDir dir("cli_usage");
  EXPECT_EQ(run("spiral-demo --out " + dir.path().string() + " --set id_method=median").code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

TEST(Cli, RuntimeErrorsExitWithOne) {
  testutil::TempDir dir("cli_runtime");
  {
    std::ofstream out(dir / "two.csv");
    out << "0,0\n1,1\n";
  }
  const CliRun r = run("id " + (dir / "two.csv").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("at least 3"), std::string::npos) << r.output;
  EXPECT_EQ(run("id " + (dir / "missing.csv").string()).code, 1);
  EXPECT_EQ(run("train-model --data " + (dir / "nothing").string() + " --out " +
                (dir / "o").string())
                .code,
            1);
}

TEST(Cli, IdOnCsvAndMaskSet) {
  testutil::TempDir dir("cli_id");
  const freqbias::Matrix square = freqbias::data::gen_hypercube(10000, 2, 1);
  freqbias::data::write_csv_matrix(square, dir / "square.csv");
  const CliRun r = run("id " + (dir / "square.csv").string());
  ASSERT_EQ(r.code, 0) << r.output;
  double d = 0.0;
  ASSERT_EQ(std::sscanf(r.output.c_str(), "I_d %lf", &d), 1) << r.output;
  EXPECT_GE(d, 1.9);
  EXPECT_LE(d, 2.1);

  freqbias::masks::MaskSet set;
  set.shape = freqbias::Shape3{1, 1, 2};
  for (std::size_t i = 0; i < 500; ++i) {
    set.values.push_back(static_cast<float>(square(i, 0)));
    set.values.push_back(static_cast<float>(square(i, 1)));
    set.image_ids.push_back(i);
    set.target_labels.push_back(0);
    set.true_labels.push_back(0);
    set.final_losses.push_back(0.0);
    set.densities.push_back(0.0);
    set.preserved.push_back(1);
  }
  freqbias::masks::save_mask_set(set, dir / "set.fmsk");
  const CliRun m = run("id " + (dir / "set.fmsk").string());
  ASSERT_EQ(m.code, 0) << m.output;
  EXPECT_NE(m.output.find("points 500"), std::string::npos) << m.output;
}

TEST(Cli, SpiralDemoSchemaAndDeterminism) {
  testutil::TempDir dir("cli_spiral");
  const std::string args = " --seed 5 --set n_points=1500 --shuffles 10";
  ASSERT_EQ(run("spiral-demo --out " + (dir / "a").string() + args).code, 0);
  ASSERT_EQ(run("spiral-demo --out " + (dir / "b").string() + args).code, 0);
  const std::string csv = slurp(dir / "a" / "spiral_demo.csv");
  EXPECT_EQ(csv, slurp(dir / "b" / "spiral_demo.csv"));
  std::istringstream lines(csv);
  std::string comment;
  std::string header;
  std::string row;
  std::getline(lines, comment);
  std::getline(lines, header);
  std::getline(lines, row);
  EXPECT_EQ(comment.rfind("# run_config: ", 0), 0u);
  EXPECT_NE(comment.find("\"seed\":\"5\""), std::string::npos);
  EXPECT_EQ(header, "R2,I_d,I_d_shuffle_mean,I_d_shuffle_std,Z,P");
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 5);
  const auto report = json_file(dir / "a" / "correlation.json");
  EXPECT_EQ(report.at("run_config").at("n_points"), "1500");
  EXPECT_LT(report.at("r2").get<double>(), 0.05);
  const std::string svg = slurp(dir / "a" / "spiral_demo.svg");
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("run_config"), std::string::npos);
}

TEST(Cli, ConfigFileWithFlagOverride) {
  testutil::TempDir dir("cli_config");
  {
    std::ofstream out(dir / "run.cfg");
    out << "# spiral settings\nseed = 9\nn_points = 800\nshuffles = 4\n";
  }
  ASSERT_EQ(run("spiral-demo --config " + (dir / "run.cfg").string() + " --shuffles 6 --out " +
                (dir / "o").string())
                .code,
            0);
  const auto report = json_file(dir / "o" / "correlation.json");
  EXPECT_EQ(report.at("run_config").at("seed"), "9");
  EXPECT_EQ(report.at("run_config").at("shuffles"), "6");
  EXPECT_EQ(report.at("shuffled_ids").size(), 6u);
}

TEST(Cli, PipelineArtifactsAndDeterminism) {
  testutil::TempDir dir("cli_pipeline");
  const CliRun a = run("pipeline --out " + (dir / "a").string() + " " + kSmallPipeline);
  ASSERT_EQ(a.code, 0) << a.output;
  const CliRun b = run("pipeline --out " + (dir / "b").string() + " " + kSmallPipeline);
  ASSERT_EQ(b.code, 0) << b.output;
  EXPECT_EQ(slurp(dir / "a" / "correlation.json"), slurp(dir / "b" / "correlation.json"));

  const std::string summary = slurp(dir / "a" / "summary.csv");
  std::istringstream lines(summary);
  std::string comment;
  std::string header;
  std::string row;
  std::getline(lines, comment);
  std::getline(lines, header);
  std::getline(lines, row);
  EXPECT_EQ(header, "attack,model,cosine_sim,I_d,I_d_shuffle,Z,P");
  std::vector<std::string> cells;
  std::stringstream ss(row);
  for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
  ASSERT_EQ(cells.size(), 7u) << row;
  for (const auto& c : cells) EXPECT_FALSE(c.empty());

  const auto ef = freqbias::masks::load_mask_set(dir / "a" / "masks_ef.fmsk");
  const auto af = freqbias::masks::load_mask_set(dir / "a" / "masks_af.fmsk");
  EXPECT_EQ(ef.image_ids, af.image_ids);
  EXPECT_GT(ef.size(), 0u);
  EXPECT_EQ(ef.config.at("run_config").at("seed"), "3");

  const auto status = json_file(dir / "a" / "status.json");
  EXPECT_TRUE(status.at("complete").get<bool>());
  for (const char* f : {"model.fbck", "adversarial.fimg", "adversarial.json",
                        "masks_ef_lambda0.fmsk", "pipeline_report.json", "mask_densities.svg",
                        "train_report.json", "dataset/train.fimg", "dataset/test.fimg"}) {
    EXPECT_TRUE(fs::exists(dir / "a" / f)) << f;
  }
  for (const char* f : {"adversarial.json", "pipeline_report.json", "train_report.json",
                        "correlation.json"}) {
    EXPECT_EQ(json_file(dir / "a" / f).at("run_config").at("seed"), "3") << f;
  }
}

TEST(Cli, FailedPipelineIsFlaggedInStatus) {
  testutil::TempDir dir("cli_fail");
  const CliRun r = run("pipeline --out " + dir.path().string() +
                    " --set n_train=40 --set n_test=20 --set epochs=2 --set max_steps=5 "
                    "--set min_steps=1 --epsilon 0 --shuffles 3");
  EXPECT_EQ(r.code, 1) << r.output;
  const auto status = json_file(dir / "status.json");
  EXPECT_FALSE(status.at("complete").get<bool>());
  EXPECT_TRUE(status.contains("error"));
}

TEST(Cli, StepwiseCommandsMatchPipelineStages) {
  testutil::TempDir dir("cli_steps");
  const std::string common = " --seed 4 --set n_train=200 --set n_test=40 --set epochs=30 "
                             "--set min_steps=100 --set max_steps=300 --epsilon 0.05";
  const std::string d = dir.path().string();
  ASSERT_EQ(run("gen-data --out " + d + "/data" + common).code, 0);
  ASSERT_EQ(run("train-model --data " + d + "/data --out " + d + "/model" + common).code, 0);
  const std::string model = d + "/model/model.fbck";
  ASSERT_EQ(run("attack --data " + d + "/data --model " + model + " --out " + d + "/adv" + common)
                .code,
            0);
  ASSERT_EQ(run("train-masks --kind ef --data " + d + "/data --model " + model + " --out " + d +
                "/masks" + common)
                .code,
            0);
  ASSERT_EQ(run("train-masks --kind af --adversarial " + d + "/adv/adversarial.fimg --data " + d +
                "/data --model " + model + " --out " + d + "/masks" + common)
                .code,
            0);
  const CliRun c = run("correlate " + d + "/masks/masks_ef.fmsk " + d + "/masks/masks_af.fmsk --out " +
                    d + "/corr --shuffles 5" + common);
  ASSERT_EQ(c.code, 0) << c.output;
  const auto report = json_file(dir / "corr" / "correlation.json");
  EXPECT_EQ(report.at("shuffled_ids").size(), 5u);
  EXPECT_TRUE(report.at("inputs").contains("aligned_images"));
  const auto side = json_file(dir / "adv" / "adversarial.json");
  EXPECT_EQ(side.at("attack"), "pgd");
  EXPECT_EQ(side.at("success").size(), side.at("source_ids").size());
  EXPECT_EQ(run("train-masks --kind xf --data " + d + "/data --model " + model + " --out " + d +
                "/masks")
                .code,
            2);
}
