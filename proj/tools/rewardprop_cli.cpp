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

// rewardprop: generate synthetic datasets, infer missing rewards, evaluate
// against ground truth, and run benchmark sweeps.
//
// Exit codes: 0 ok, 1 I/O or other failure, 2 parse/validation, 3 slice or
// contractivity failure, 4 training failure, 5 eval misalignment,
// 6 eval assertion failed.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rewardprop/dataset_io.hpp"
#include "rewardprop/pipeline.hpp"
#include "rewardprop/synthbench.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rewardprop;

namespace {

enum Exit { kOk = 0, kFailure = 1, kParse = 2, kSlice = 3, kTraining = 4, kMisaligned = 5,
            kAssertion = 6 };

int ExitFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSliceWithoutLabels:
    case ErrorCode::kNotContractive:
    case ErrorCode::kDegenerateSlice:
    case ErrorCode::kNoLabeledNodes:
    case ErrorCode::kNoUnlabeledNodes:
    case ErrorCode::kMaxItersExceeded:
    case ErrorCode::kSingularSystem:
      return kSlice;
    case ErrorCode::kTooFewLabels:
    case ErrorCode::kDivergenceDetected:
      return kTraining;
    case ErrorCode::kIoFailure:
      return kFailure;
    default:
      return kParse;
  }
}

/// Thrown for eval misalignment.
struct Misaligned : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json ReadJsonFile(const fs::path& path) {
  std::ifstream in(path);
  Require(in.good(), ErrorCode::kIoFailure, "cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kInvalidArgument, path.string() + ": " + e.what());
  }
}

void WriteJsonFile(const json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  Require(out.good(), ErrorCode::kIoFailure, "cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  Require(out.good(), ErrorCode::kIoFailure, "write to '" + path.string() + "' failed");
}

fs::path WithSuffix(const fs::path& path, const std::string& suffix) {
  return fs::path(path.string() + suffix);
}

// ---------------------------------------------------------------------------
// Task specs.

const std::vector<std::string> kTaskKeys = {
    "name",         "reward_model", "state_factors", "action_factors", "factor_weights",
    "factor_scales", "noise_std",   "num_records",   "label_ratio",    "seed",
    "reward_offset", "num_clusters", "cluster_std",  "center_scale",   "coord_std",
    "chain_length",  "step_std"};

template <typename T>
void Take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

SyntheticTaskSpec TaskFromJson(const json& j) {
  Require(j.is_object(), ErrorCode::kInvalidArgument, "task spec must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    Require(std::find(kTaskKeys.begin(), kTaskKeys.end(), key) != kTaskKeys.end(),
            ErrorCode::kInvalidArgument, "unknown task spec key '" + key + "'");
  }
  SyntheticTaskSpec spec;
  try {
    spec.schema = SchemaFromJson(j);
    Take(j, "name", spec.name);
    if (j.contains("reward_model")) {
      spec.reward_model = ParseRewardModel(j.at("reward_model").get<std::string>());
    }
    Take(j, "factor_weights", spec.factor_weights);
    Take(j, "factor_scales", spec.factor_scales);
    Take(j, "noise_std", spec.noise_std);
    Take(j, "num_records", spec.num_records);
    Take(j, "label_ratio", spec.label_ratio);
    Take(j, "seed", spec.seed);
    Take(j, "reward_offset", spec.reward_offset);
    Take(j, "num_clusters", spec.num_clusters);
    Take(j, "cluster_std", spec.cluster_std);
    Take(j, "center_scale", spec.center_scale);
    Take(j, "coord_std", spec.coord_std);
    Take(j, "chain_length", spec.chain_length);
    Take(j, "step_std", spec.step_std);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kInvalidArgument, std::string("task spec: ") + e.what());
  }
  spec.Validate();
  return spec;
}

json TaskToJson(const SyntheticTaskSpec& spec) {
  json j = SchemaToJson(spec.schema);
  j["name"] = spec.name;
  j["reward_model"] = RewardModelName(spec.reward_model);
  j["factor_weights"] = spec.factor_weights;
  j["factor_scales"] = spec.factor_scales;
  j["noise_std"] = spec.noise_std;
  j["num_records"] = spec.num_records;
  j["label_ratio"] = spec.label_ratio;
  j["seed"] = spec.seed;
  j["reward_offset"] = spec.reward_offset;
  j["num_clusters"] = spec.num_clusters;
  j["cluster_std"] = spec.cluster_std;
  j["center_scale"] = spec.center_scale;
  j["coord_std"] = spec.coord_std;
  j["chain_length"] = spec.chain_length;
  j["step_std"] = spec.step_std;
  return j;
}

// ---------------------------------------------------------------------------
// Pipeline options shared by infer and sweep.

struct PipelineFlags {
  std::size_t slice_size = 10000;
  std::size_t label_borrow = 0;
  double p_norm = 2.0;
  std::string method = "auto";
  double tol = 1e-10;
  std::size_t max_iters = 10000;
  std::size_t train_iters = 500;
  double grad_tol = 1e-6;
  double lr = 10.0;
  std::size_t jobs = 1;
  std::uint64_t seed = 0;
  bool strict_eq3 = false;
  bool tie_theta = false;
  std::size_t top_k = 0;

  void Register(CLI::App& app) {
    auto env = [](const char* name) { return std::string("REWARDPROP_") + name; };
    app.add_option("--slice-size", slice_size, "Records per slice")
        ->envname(env("SLICE_SIZE"))->capture_default_str();
    app.add_option("--label-borrow", label_borrow,
                   "Labeled records borrowed into label-free slices (0 = error)")
        ->envname(env("LABEL_BORROW"))->capture_default_str();
    app.add_option("--p-norm", p_norm, "Exponent of the per-factor p-norm (>= 1)")
        ->envname(env("P_NORM"))->capture_default_str();
    app.add_option("--method", method, "Inference method")
        ->check(CLI::IsMember({"iterative", "direct", "auto"}))
        ->envname(env("METHOD"))->capture_default_str();
    app.add_option("--tol", tol, "Inference tolerance")
        ->envname(env("TOL"))->capture_default_str();
    app.add_option("--max-iters", max_iters, "Inference iteration cap")
        ->envname(env("MAX_ITERS"))->capture_default_str();
    app.add_option("--train-iters", train_iters, "Training iteration cap")
        ->envname(env("TRAIN_ITERS"))->capture_default_str();
    app.add_option("--grad-tol", grad_tol, "Training gradient tolerance (inf-norm)")
        ->envname(env("GRAD_TOL"))->capture_default_str();
    app.add_option("--lr", lr, "Initial gradient-descent step")
        ->envname(env("LR"))->capture_default_str();
    app.add_option("--jobs", jobs, "Concurrent slices or sweep cells")
        ->envname(env("JOBS"))->capture_default_str();
    app.add_option("--seed", seed, "Seed for generation and training jitter")
        ->envname(env("SEED"))->capture_default_str();
    app.add_flag("--strict-eq3", strict_eq3,
                 "Use raw row weights for the leave-one-out prediction")
        ->envname(env("STRICT_EQ3"));
    app.add_flag("--tie-theta", tie_theta, "Train one shared theta for all factors")
        ->envname(env("TIE_THETA"));
    app.add_option("--top-k", top_k, "Keep the k largest weights per row (0 = dense)")
        ->envname(env("TOP_K"))->capture_default_str();
  }

  PipelineConfig Resolve() const {
    PipelineConfig cfg;
    cfg.slice_size = slice_size;
    cfg.borrow_labels = label_borrow;
    cfg.distance.p = p_norm;
    cfg.inference.method = ParseMethod(method);
    cfg.inference.tol = tol;
    cfg.inference.max_iters = max_iters;
    cfg.train.max_iters = train_iters;
    cfg.train.grad_tol = grad_tol;
    cfg.train.learning_rate = lr;
    cfg.train.seed = seed;
    cfg.train.renormalize_peers = !strict_eq3;
    cfg.train.tie_theta = tie_theta;
    cfg.graph.top_k = top_k;
    cfg.jobs = jobs;
    cfg.distance.Validate();
    cfg.train.Validate();
    cfg.inference.Validate();
    Require(cfg.slice_size >= 2, ErrorCode::kInvalidArgument, "--slice-size must be >= 2");
    Require(cfg.train.learning_rate > 0.0, ErrorCode::kInvalidArgument, "--lr must be > 0");
    return cfg;
  }
};

json ConfigToJson(const PipelineConfig& cfg) {
  return {
      {"slice_size", cfg.slice_size},
      {"label_borrow", cfg.borrow_labels},
      {"p_norm", cfg.distance.p},
      {"method", MethodName(cfg.inference.method)},
      {"tol", cfg.inference.tol},
      {"max_iters", cfg.inference.max_iters},
      {"direct_size_cap", cfg.inference.direct_size_cap},
      {"train_iters", cfg.train.max_iters},
      {"grad_tol", cfg.train.grad_tol},
      {"lr", cfg.train.learning_rate},
      {"init_theta", cfg.train.init_theta},
      {"seed", cfg.train.seed},
      {"backtracking", cfg.train.backtracking},
      {"max_halvings", cfg.train.max_halvings},
      {"strict_eq3", !cfg.train.renormalize_peers},
      {"tie_theta", cfg.train.tie_theta},
      {"top_k", cfg.graph.top_k},
      {"jobs", cfg.jobs},
  };
}

json SliceToJson(const SliceReport& s) {
  json j = {{"index", s.index},
            {"begin", s.begin},
            {"end", s.end},
            {"num_labeled", s.num_labeled},
            {"num_unlabeled", s.num_unlabeled},
            {"num_borrowed", s.num_borrowed},
            {"theta", s.params.theta},
            {"note", s.note}};
  if (s.train) {
    j["train"] = {{"initial_theta", s.train->initial_params.theta},
                  {"loss_trace", s.train->loss_trace},
                  {"iterations", s.train->iterations_used},
                  {"converged", s.train->converged},
                  {"final_grad_norm", s.train->final_grad_norm},
                  {"stop_reason", s.train->stop_reason}};
  }
  if (s.inference) {
    j["inference"] = {{"method", MethodName(s.inference->method)},
                      {"iterations", s.inference->iterations_used},
                      {"residual", s.inference->residual},
                      {"contraction_bound", s.inference->contraction_bound}};
  }
  return j;
}

// ---------------------------------------------------------------------------
// Subcommands.

struct GenArgs {
  std::string spec;
  std::string out;
  std::string truth;
  std::optional<std::uint64_t> seed;
};

int RunGen(const GenArgs& args) {
  auto spec = TaskFromJson(ReadJsonFile(args.spec));
  if (args.seed) spec.seed = *args.seed;
  const auto synth = GenerateSynthetic(spec);
  const fs::path out = args.out;
  SaveDataset(synth.dataset, out, FormatFromPath(out));
  const fs::path truth = args.truth.empty() ? WithSuffix(out, ".truth.json") : fs::path(args.truth);
  WriteJsonFile({{"spec", TaskToJson(spec)},
                 {"schema", SchemaToJson(spec.schema)},
                 {"rewards", synth.ground_truth},
                 {"unlabeled_indices", synth.dataset.unlabeled_indices()}},
                truth);
  std::cout << "wrote " << out.string() << " (" << synth.dataset.size() << " records, "
            << synth.dataset.num_labeled() << " labeled) and " << truth.string() << '\n';
  return kOk;
}

struct InferArgs {
  std::string dataset;
  std::string out;
  std::string report;
  std::string dump_weights;
};

int RunInfer(const InferArgs& args, const PipelineFlags& flags) {
  const auto cfg = flags.Resolve();
  const fs::path in = args.dataset;
  const auto dataset = LoadDataset(in, FormatFromPath(in));
  const auto result = InferRewards(dataset, cfg);
  const fs::path out = args.out;
  SaveDataset(result.dataset, out, FormatFromPath(out));

  json slices = json::array();
  json timing = json::array();
  for (const auto& s : result.slices) {
    slices.push_back(SliceToJson(s));
    timing.push_back({{"index", s.index},
                      {"train_seconds", s.timing.train_seconds},
                      {"build_seconds", s.timing.build_seconds},
                      {"solve_seconds", s.timing.solve_seconds}});
  }
  const fs::path report = args.report.empty() ? WithSuffix(out, ".report.json") : fs::path(args.report);
  WriteJsonFile({{"input", in.filename().string()},
                 {"config", ConfigToJson(cfg)},
                 {"num_records", dataset.size()},
                 {"num_labeled", dataset.num_labeled()},
                 {"slices", slices}},
                report);
  // Wall-clock numbers vary run to run; they live apart from the report so
  // the report stays byte-identical for identical inputs.
  WriteJsonFile({{"slices", timing}}, WithSuffix(out, ".timing.json"));

  if (!args.dump_weights.empty()) {
    fs::create_directories(args.dump_weights);
    const auto prepared = PrepareSlices(dataset, cfg);
    for (const auto& s : result.slices) {
      if (!s.inference) continue;
      const auto graph = BuildWeightMatrix(prepared[s.index], s.params, cfg.distance, cfg.graph);
      WriteDenseMatrix(graph.weights(),
                       fs::path(args.dump_weights) / ("slice_" + std::to_string(s.index) + ".rpwm"));
    }
  }
  std::cout << "inferred " << dataset.num_unlabeled() << " rewards over " << result.slices.size()
            << " slices; wrote " << out.string() << " and " << report.string() << '\n';
  return kOk;
}

struct EvalArgs {
  std::string inferred;
  std::string truth;
  std::size_t batches = 5;
  std::optional<double> assert_max_diff;
};

/// Reference rewards and the indices they are compared on. A truth file
/// compares its unlabeled indices; a dataset compares every record.
struct Reference {
  std::vector<double> rewards;
  std::vector<std::size_t> indices;
};

Reference LoadReference(const fs::path& path) {
  Reference ref;
  if (path.extension() == ".json") {
    const auto j = ReadJsonFile(path);
    try {
      ref.rewards = j.at("rewards").get<std::vector<double>>();
      ref.indices = j.at("unlabeled_indices").get<std::vector<std::size_t>>();
    } catch (const json::exception& e) {
      Fail(ErrorCode::kInvalidArgument, path.string() + ": " + e.what());
    }
    for (std::size_t i : ref.indices) {
      if (i >= ref.rewards.size()) {
        throw Misaligned("truth index " + std::to_string(i) + " out of range");
      }
    }
    return ref;
  }
  const auto ds = LoadDataset(path, FormatFromPath(path));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!ds.record(i).reward) throw Misaligned(path.string() + ": record " + std::to_string(i) + " has no reward");
    ref.rewards.push_back(*ds.record(i).reward);
    ref.indices.push_back(i);
  }
  return ref;
}

int RunEval(const EvalArgs& args) {
  const fs::path inferred_path = args.inferred;
  const auto inferred = LoadDataset(inferred_path, FormatFromPath(inferred_path));
  const auto ref = LoadReference(args.truth);
  if (inferred.size() != ref.rewards.size()) {
    throw Misaligned("record counts differ: " + std::to_string(inferred.size()) + " vs " +
                     std::to_string(ref.rewards.size()));
  }
  if (ref.indices.empty()) throw Misaligned("no records to compare");
  std::vector<double> got;
  std::vector<double> want;
  double max_diff = 0.0;
  for (std::size_t i : ref.indices) {
    const auto& r = inferred.record(i).reward;
    if (!r) throw Misaligned("record " + std::to_string(i) + " has no inferred reward");
    got.push_back(*r);
    want.push_back(ref.rewards[i]);
    max_diff = std::max(max_diff, std::abs(*r - ref.rewards[i]));
  }
  std::printf("records %zu\nmse %.17g\nmax_abs_diff %.17g\n", got.size(),
              BatchedMse(got, want, args.batches), max_diff);
  if (args.assert_max_diff && !(max_diff <= *args.assert_max_diff)) {
    std::fprintf(stderr, "max_abs_diff %.17g exceeds %.17g\n", max_diff, *args.assert_max_diff);
    return kAssertion;
  }
  return kOk;
}

struct SweepArgs {
  std::string kind;
  std::string spec;
  std::string out;
};

int RunSweep(const SweepArgs& args, const PipelineFlags& flags) {
  const auto cfg = flags.Resolve();
  const auto j = ReadJsonFile(args.spec);
  std::vector<SyntheticTaskSpec> tasks;
  std::vector<std::uint64_t> seeds;
  std::vector<double> axis;
  try {
    Require(j.is_object() && j.contains("tasks") && j["tasks"].is_array(),
            ErrorCode::kInvalidArgument, "sweep spec needs a 'tasks' array");
    for (const auto& t : j["tasks"]) tasks.push_back(TaskFromJson(t));
    seeds = j.value("seeds", std::vector<std::uint64_t>{1, 2, 3, 4, 5});
    if (args.kind == "ratio") axis = j.value("ratios", std::vector<double>{0.05, 0.1, 0.15, 0.2});
    if (args.kind == "norm") axis = j.value("p_values", std::vector<double>{1.0, 1.5, 2.0, 2.5});
  } catch (const json::exception& e) {
    Fail(ErrorCode::kInvalidArgument, std::string("sweep spec: ") + e.what());
  }

  std::vector<SweepReport> reports;
  if (args.kind == "ratio") {
    reports.push_back(RunRatioSweep(tasks, axis, seeds, cfg));
  } else if (args.kind == "norm") {
    reports.push_back(RunNormSweep(tasks, axis, seeds, cfg));
  } else {
    for (const auto& t : tasks) reports.push_back(RunFactorizationAblation(t, seeds, cfg));
  }

  std::ostringstream csv;
  csv << "task,axis,value,mean_mse,std,seeds,vacuous\n";
  std::string seed_list;
  for (std::size_t i = 0; i < seeds.size(); ++i) seed_list += (i ? " " : "") + std::to_string(seeds[i]);
  json cells = json::array();
  json sensitivity = json::object();
  json trend = json::object();
  char buf[64];
  for (const auto& rep : reports) {
    for (const auto& c : rep.cells) {
      csv << c.task << ',' << c.axis << ',' << c.label << ',';
      std::snprintf(buf, sizeof buf, "%.17g", c.mean);
      csv << buf << ',';
      std::snprintf(buf, sizeof buf, "%.17g", c.std);
      csv << buf << ',' << seed_list << ',' << (c.vacuous ? "true" : "false") << '\n';
      cells.push_back({{"task", c.task}, {"axis", c.axis}, {"value", c.axis_value},
                       {"mean_mse", c.mean}, {"std", c.std}, {"per_seed", c.per_seed},
                       {"vacuous", c.vacuous}});
    }
    for (const auto& t : tasks) {
      bool any = false;
      for (const auto& c : rep.cells) any = any || c.task == t.name;
      if (!any) continue;
      sensitivity[t.name] = rep.Sensitivity(t.name);
      if (args.kind == "ratio") {
        bool monotone = true;
        double prev = std::numeric_limits<double>::infinity();
        for (const auto& c : rep.cells) {
          if (c.task != t.name) continue;
          monotone = monotone && c.mean <= prev;
          prev = c.mean;
        }
        trend[t.name] = {{"non_increasing", monotone}};
      } else if (args.kind == "ablation") {
        const double m1 = rep.Find(t.name, "1")->mean;
        const double m4 = rep.Find(t.name, "4")->mean;
        trend[t.name] = {{"method1_le_method4", m1 <= m4},
                         {"method4_over_method1", m1 > 0.0 ? json(m4 / m1) : json(nullptr)}};
      }
    }
  }
  const fs::path csv_path = WithSuffix(args.out, ".csv");
  {
    std::ofstream f(csv_path, std::ios::trunc);
    Require(f.good(), ErrorCode::kIoFailure, "cannot open '" + csv_path.string() + "'");
    f << csv.str();
  }
  json tasks_json = json::array();
  for (const auto& t : tasks) tasks_json.push_back(TaskToJson(t));
  WriteJsonFile({{"kind", args.kind},
                 {"seeds", seeds},
                 {"axis_values", axis},
                 {"config", ConfigToJson(cfg)},
                 {"tasks", tasks_json},
                 {"cells", cells},
                 {"sensitivity", sensitivity},
                 {"trend", trend}},
                WithSuffix(args.out, ".json"));
  std::cout << "wrote " << csv_path.string() << " and " << args.out << ".json\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reward inference on learned reward-propagation graphs"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "INI/TOML file of flag values; command-line flags win");
  PipelineFlags flags;
  flags.Register(app);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic dataset and its ground truth");
  gen_cmd->add_option("--spec", gen.spec, "Task spec JSON")->required()->check(CLI::ExistingFile);
  gen_cmd->add_option("--out", gen.out, "Output dataset (.jsonl, or .bin/.rpds for binary)")->required();
  gen_cmd->add_option("--truth", gen.truth, "Ground-truth JSON (default <out>.truth.json)");

  InferArgs infer;
  auto* infer_cmd = app.add_subcommand("infer", "Fill in missing rewards");
  infer_cmd->add_option("dataset", infer.dataset, "Input dataset")->required()->check(CLI::ExistingFile);
  infer_cmd->add_option("--out", infer.out, "Output dataset")->required();
  infer_cmd->add_option("--report", infer.report, "Report JSON (default <out>.report.json)");
  infer_cmd->add_option("--dump-weights", infer.dump_weights,
                        "Directory for per-slice dense weight matrices");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Compare inferred rewards with a reference");
  eval_cmd->add_option("inferred", eval.inferred, "Inferred dataset")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("truth", eval.truth, "Truth JSON from gen, or another dataset")
      ->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--batches", eval.batches, "Batches for the averaged MSE")->capture_default_str();
  eval_cmd->add_option("--assert-max-diff", eval.assert_max_diff,
                       "Exit 6 when the max absolute difference exceeds this");

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a benchmark sweep");
  sweep_cmd->add_option("--kind", sweep.kind, "Sweep kind")
      ->required()->check(CLI::IsMember({"ratio", "norm", "ablation"}));
  sweep_cmd->add_option("--spec", sweep.spec, "Sweep spec JSON")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--out", sweep.out, "Output prefix; writes <out>.csv and <out>.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kParse;
  }

  try {
    if (gen_cmd->parsed()) {
      if (app.get_option("--seed")->count() > 0) gen.seed = flags.seed;
      return RunGen(gen);
    }
    if (infer_cmd->parsed()) return RunInfer(infer, flags);
    if (eval_cmd->parsed()) return RunEval(eval);
    return RunSweep(sweep, flags);
  } catch (const Misaligned& e) {
    std::cerr << "error: misaligned inputs: " << e.what() << '\n';
    return kMisaligned;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ExitFor(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}
