// Copyright 2026 The rewardprop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "rewardprop/dataset_io.hpp"
#include "rewardprop/synthbench.hpp"
#include "test_util.hpp"

namespace rewardprop {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct RunResult {
  int exit_code;
  std::string out;
  std::string err;
};

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult RunCli(const testing::TempDir& dir, const std::string& args, const std::string& env = "") {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = env + " '" REWARDPROP_CLI_PATH "' " + args + " >'" + out.string() +
                          "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, Slurp(out), Slurp(err)};
}

json TaskJson(std::size_t z = 300, double ratio = 0.15) {
  return {{"name", "clusters"},
          {"state_factors", {{{"name", "s0"}, {"dim", 2}}, {{"name", "s1"}, {"dim", 2}}}},
          {"action_factors", {{{"name", "a0"}, {"dim", 2}}}},
          {"factor_weights", {1.0, 1.0, 0.5}},
          {"num_records", z},
          {"label_ratio", ratio},
          {"seed", 4}};
}

void WriteJson(const fs::path& p, const json& j) { std::ofstream(p) << j.dump(); }

TEST(CliTest, GenWritesDatasetAndTruth) {
  testing::TempDir dir;
  WriteJson(dir / "spec.json", TaskJson());
  const auto r = RunCli(dir, "gen --spec " + (dir / "spec.json").string() + " --out " +
                              (dir / "d.jsonl").string());
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto ds = LoadDataset(dir / "d.jsonl", DatasetFormat::kJsonl);
  EXPECT_EQ(ds.size(), 300u);
  EXPECT_EQ(ds.num_labeled(), 45u);
  const auto truth = json::parse(Slurp(dir / "d.jsonl.truth.json"));
  EXPECT_EQ(truth["rewards"].size(), 300u);
  EXPECT_EQ(truth["unlabeled_indices"].get<std::vector<std::size_t>>(), ds.unlabeled_indices());
}

TEST(CliTest, MalformedSpecIsParseError) {
  testing::TempDir dir;
  std::ofstream(dir / "bad.json") << "{\"name\": ";
  auto r = RunCli(dir, "gen --spec " + (dir / "bad.json").string() + " --out " +
                        (dir / "d.jsonl").string());
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("parse error"), std::string::npos) << r.err;

  auto spec = TaskJson();
  spec["colour"] = "blue";
  WriteJson(dir / "extra.json", spec);
  r = RunCli(dir, "gen --spec " + (dir / "extra.json").string() + " --out " + (dir / "d.jsonl").string());
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("colour"), std::string::npos);

  spec = TaskJson(10, 0.1);
  WriteJson(dir / "infeasible.json", spec);
  r = RunCli(dir, "gen --spec " + (dir / "infeasible.json").string() + " --out " +
                   (dir / "d.jsonl").string());
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("InfeasibleSpec"), std::string::npos);

  EXPECT_EQ(RunCli(dir, "gen --out x.jsonl").exit_code, 2);
  EXPECT_EQ(RunCli(dir, "").exit_code, 2);
  EXPECT_EQ(RunCli(dir, "infer --method newton x").exit_code, 2);
}

TEST(CliTest, SameSeedSameBytes) {
  testing::TempDir dir;
  WriteJson(dir / "spec.json", TaskJson());
  for (const char* name : {"a", "b"}) {
    const std::string base = (dir / name).string();
    ASSERT_EQ(RunCli(dir, "gen --spec " + (dir / "spec.json").string() + " --out " + base + ".bin")
                  .exit_code,
              0);
    ASSERT_EQ(RunCli(dir, "infer " + base + ".bin --out " + base + ".out.jsonl --slice-size 150")
                  .exit_code,
              0);
  }
  EXPECT_EQ(Slurp(dir / "a.bin"), Slurp(dir / "b.bin"));
  EXPECT_EQ(Slurp(dir / "a.bin.truth.json"), Slurp(dir / "b.bin.truth.json"));
  EXPECT_EQ(Slurp(dir / "a.out.jsonl"), Slurp(dir / "b.out.jsonl"));
  auto report_a = json::parse(Slurp(dir / "a.out.jsonl.report.json"));
  auto report_b = json::parse(Slurp(dir / "b.out.jsonl.report.json"));
  report_a.erase("input");
  report_b.erase("input");
  EXPECT_EQ(report_a, report_b);
  // --seed overrides the spec's seed.
  ASSERT_EQ(RunCli(dir, "gen --spec " + (dir / "spec.json").string() + " --out " +
                         (dir / "c.bin").string() + " --seed 99")
                .exit_code,
            0);
  EXPECT_NE(Slurp(dir / "a.bin"), Slurp(dir / "c.bin"));
}

class CliInferTest : public ::testing::Test {
 protected:
  void SetUp() override {
    WriteJson(dir_ / "spec.json", TaskJson(400, 0.15));
    ASSERT_EQ(RunCli(dir_, "gen --spec " + Path("spec.json") + " --out " + Path("d.jsonl")).exit_code,
              0);
  }
  std::string Path(const std::string& name) const { return (dir_ / name).string(); }
  testing::TempDir dir_;
};

TEST_F(CliInferTest, FillsEveryReward) {
  const auto r = RunCli(dir_, "infer " + Path("d.jsonl") + " --out " + Path("o.jsonl") +
                               " --slice-size 200 --train-iters 50");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto out = LoadDataset(Path("o.jsonl"), DatasetFormat::kJsonl);
  EXPECT_EQ(out.num_labeled(), 400u);
  const auto report = json::parse(Slurp(Path("o.jsonl.report.json")));
  EXPECT_EQ(report["slices"].size(), 2u);
  EXPECT_EQ(report["config"]["slice_size"], 200);
  EXPECT_EQ(report["config"]["train_iters"], 50);
  EXPECT_LT(report["slices"][0]["inference"]["residual"].get<double>(), 1e-10);
  const auto timing = json::parse(Slurp(Path("o.jsonl.timing.json")));
  EXPECT_EQ(timing["slices"].size(), 2u);

  const auto e = RunCli(dir_, "eval " + Path("o.jsonl") + " " + Path("d.jsonl.truth.json"));
  ASSERT_EQ(e.exit_code, 0) << e.err;
  EXPECT_NE(e.out.find("records 340"), std::string::npos) << e.out;
}

TEST_F(CliInferTest, LabelFreeSliceExitsThree) {
  const auto r = RunCli(dir_, "infer " + Path("d.jsonl") + " --out " + Path("o.jsonl") +
                               " --slice-size 10");
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_NE(r.err.find("SliceWithoutLabels: slice 7"), std::string::npos) << r.err;
  EXPECT_EQ(RunCli(dir_, "infer " + Path("d.jsonl") + " --out " + Path("o.jsonl") +
                          " --slice-size 10 --label-borrow 2 --train-iters 5")
                .exit_code,
            0);
}

TEST_F(CliInferTest, DirectAndIterativeAgree) {
  ASSERT_EQ(RunCli(dir_, "infer " + Path("d.jsonl") + " --out " + Path("direct.bin") +
                          " --method direct --slice-size 400")
                .exit_code,
            0);
  ASSERT_EQ(RunCli(dir_, "infer " + Path("d.jsonl") + " --out " + Path("iter.bin") +
                          " --method iterative --tol 1e-12 --max-iters 10000000 --slice-size 400")
                .exit_code,
            0);
  const auto e = RunCli(dir_, "eval " + Path("iter.bin") + " " + Path("direct.bin") +
                               " --assert-max-diff 1e-8");
  EXPECT_EQ(e.exit_code, 0) << e.out << e.err;
}

TEST_F(CliInferTest, ConfigFileEnvAndFlagPrecedence) {
  // Command line > config file > environment > built-in default.
  std::ofstream(Path("run.ini")) << "slice-size = 100\ntrain-iters = 7\np-norm = 1.5\n";
  const std::string infer = " infer " + Path("d.jsonl") + " --out " + Path("o.jsonl");
  auto config = [&] { return json::parse(Slurp(Path("o.jsonl.report.json")))["config"]; };

  auto r = RunCli(dir_, "--config " + Path("run.ini") + infer + " --train-iters 9",
                  "REWARDPROP_P_NORM=3 REWARDPROP_LR=2");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  auto cfg = config();
  EXPECT_EQ(cfg["slice_size"], 100);
  EXPECT_EQ(cfg["train_iters"], 9);
  EXPECT_EQ(cfg["p_norm"], 1.5);
  EXPECT_EQ(cfg["lr"], 2.0);
  EXPECT_EQ(cfg["strict_eq3"], false);

  r = RunCli(dir_, infer + " --strict-eq3 --train-iters 3", "REWARDPROP_P_NORM=3 REWARDPROP_TIE_THETA=1");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  cfg = config();
  EXPECT_EQ(cfg["p_norm"], 3.0);
  EXPECT_EQ(cfg["slice_size"], 10000);
  EXPECT_EQ(cfg["strict_eq3"], true);
  EXPECT_EQ(cfg["tie_theta"], true);
  const auto theta = json::parse(Slurp(Path("o.jsonl.report.json")))["slices"][0]["theta"];
  EXPECT_EQ(theta[0], theta[1]);
  EXPECT_EQ(theta[1], theta[2]);
}

TEST_F(CliInferTest, DumpWeights) {
  ASSERT_EQ(RunCli(dir_, "infer " + Path("d.jsonl") + " --out " + Path("o.jsonl") +
                          " --slice-size 200 --train-iters 5 --dump-weights " + Path("w"))
                .exit_code,
            0);
  const auto w = ReadDenseMatrix(dir_ / "w/slice_1.rpwm");
  EXPECT_EQ(w.rows(), 200u);
  for (std::size_t i = 0; i < w.rows(); ++i) {
    double s = 0.0;
    for (double v : w.row(i)) s += v;
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(CliEvalTest, MseExamplesAndMisalignment) {
  testing::TempDir dir;
  const FactorSchema schema({{"s", 1}}, {{"a", 1}});
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<StateActionRecord> recs(10);
  std::vector<double> truth(10);
  for (std::size_t i = 0; i < 10; ++i) {
    recs[i] = {{g(rng)}, {g(rng)}, g(rng)};
    truth[i] = *recs[i].reward;
  }
  SaveDataset(PartiallyLabeledDataset(schema, recs), dir / "inferred.jsonl", DatasetFormat::kJsonl);
  std::vector<std::size_t> all(10);
  for (std::size_t i = 0; i < 10; ++i) all[i] = i;
  auto write_truth = [&](const std::vector<double>& r, const std::vector<std::size_t>& idx) {
    WriteJson(dir / "truth.json", {{"rewards", r}, {"unlabeled_indices", idx}});
  };
  auto mse_of = [&](const RunResult& r) {
    const auto pos = r.out.find("mse ");
    return std::stod(r.out.substr(pos + 4));
  };
  const std::string args = "eval " + (dir / "inferred.jsonl").string() + " " + (dir / "truth.json").string();

  write_truth(truth, all);
  auto r = RunCli(dir, args);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(mse_of(r), 0.0);

  std::vector<double> shifted = truth;
  for (double& v : shifted) v += 1.0;
  write_truth(shifted, all);
  r = RunCli(dir, args);
  EXPECT_NEAR(mse_of(r), 1.0, 1e-15);
  EXPECT_EQ(RunCli(dir, args + " --assert-max-diff 0.5").exit_code, 6);

  std::vector<double> other(10);
  for (double& v : other) v = g(rng);
  write_truth(other, all);
  std::vector<double> got(truth);
  EXPECT_NEAR(mse_of(RunCli(dir, args)), BatchedMse(got, other), 1e-15);

  write_truth(std::vector<double>(9, 0.0), std::vector<std::size_t>{0});
  EXPECT_EQ(RunCli(dir, args).exit_code, 5);
  write_truth(truth, std::vector<std::size_t>{12});
  EXPECT_EQ(RunCli(dir, args).exit_code, 5);
}

TEST(CliSweepTest, RatioSweepShape) {
  testing::TempDir dir;
  WriteJson(dir / "sweep.json",
            {{"tasks", {TaskJson(200)}}, {"ratios", {0.1, 0.2}}, {"seeds", {1, 2}}});
  const auto r = RunCli(dir, "sweep --kind ratio --spec " + (dir / "sweep.json").string() +
                              " --out " + (dir / "res").string() + " --train-iters 20");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  std::istringstream csv(Slurp(dir / "res.csv"));
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(csv, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "task,axis,value,mean_mse,std,seeds,vacuous");
  EXPECT_EQ(lines[1].rfind("clusters,label_ratio,0.1,", 0), 0u);
  EXPECT_NE(lines[1].find(",1 2,"), std::string::npos);
  const auto summary = json::parse(Slurp(dir / "res.json"));
  EXPECT_EQ(summary["cells"].size(), 2u);
  EXPECT_TRUE(summary["trend"]["clusters"].contains("non_increasing"));
}

TEST(CliSweepTest, SingleFactorAblationIsFlat) {
  testing::TempDir dir;
  json task = TaskJson(150);
  task["state_factors"] = {{{"name", "s"}, {"dim", 3}}};
  task["action_factors"] = {{{"name", "a"}, {"dim", 1}}};
  task["factor_weights"] = {1.0, 1.0};
  WriteJson(dir / "sweep.json", {{"tasks", {task}}, {"seeds", {1, 2}}});
  const auto r = RunCli(dir, "sweep --kind ablation --spec " + (dir / "sweep.json").string() +
                              " --out " + (dir / "res").string() + " --train-iters 20");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto cells = json::parse(Slurp(dir / "res.json"))["cells"];
  ASSERT_EQ(cells.size(), 4u);
  for (const auto& c : cells) EXPECT_EQ(c["per_seed"], cells[0]["per_seed"]);

  task["state_factors"] = {{{"name", "s0"}, {"dim", 1}}, {{"name", "s1"}, {"dim", 1}}};
  task["factor_weights"] = {1.0, 1.0, 1.0};
  WriteJson(dir / "bad.json", {{"tasks", {task}}, {"seeds", {1}}});
  EXPECT_EQ(RunCli(dir, "sweep --kind ablation --spec " + (dir / "bad.json").string() + " --out " +
                         (dir / "res").string())
                .exit_code,
            2);
}

TEST(CliSweepTest, NormSweepReportsSensitivity) {
  testing::TempDir dir;
  WriteJson(dir / "sweep.json",
            {{"tasks", {TaskJson(200)}}, {"p_values", {1.0, 2.0}}, {"seeds", {1}}});
  const auto r = RunCli(dir, "sweep --kind norm --spec " + (dir / "sweep.json").string() +
                              " --out " + (dir / "res").string() + " --train-iters 20");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto summary = json::parse(Slurp(dir / "res.json"));
  EXPECT_GE(summary["sensitivity"]["clusters"].get<double>(), 0.0);
  WriteJson(dir / "bad.json", {{"tasks", {TaskJson(200)}}, {"p_values", {0.5}}, {"seeds", {1}}});
  EXPECT_EQ(RunCli(dir, "sweep --kind norm --spec " + (dir / "bad.json").string() + " --out " +
                         (dir / "res").string())
                .exit_code,
            2);
}

}  // namespace
}  // namespace rewardprop
