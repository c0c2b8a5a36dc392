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

// Synthetic tasks with known reward functions and the sweep harness that
// measures reward-inference MSE over label ratio, p-norm, and factorization.

#ifndef REWARDPROP_SYNTHBENCH_HPP_
#define REWARDPROP_SYNTHBENCH_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rewardprop/dataset.hpp"
#include "rewardprop/error.hpp"
#include "rewardprop/parallel.hpp"
#include "rewardprop/pipeline.hpp"

namespace rewardprop {

enum class RewardModel { kWeightedQuadratic, kClusterPiecewise, kTrajectoryChain };

inline std::string_view RewardModelName(RewardModel m) {
  switch (m) {
    case RewardModel::kWeightedQuadratic: return "weighted_quadratic";
    case RewardModel::kClusterPiecewise: return "cluster_piecewise";
    case RewardModel::kTrajectoryChain: return "trajectory_chain";
  }
  return "weighted_quadratic";
}

inline RewardModel ParseRewardModel(std::string_view s) {
  if (s == "weighted_quadratic") return RewardModel::kWeightedQuadratic;
  if (s == "cluster_piecewise") return RewardModel::kClusterPiecewise;
  if (s == "trajectory_chain") return RewardModel::kTrajectoryChain;
  Fail(ErrorCode::kInfeasibleSpec, "unknown reward model '" + std::string(s) + "'");
}

struct SyntheticTaskSpec {
  std::string name = "task";
  FactorSchema schema;
  RewardModel reward_model = RewardModel::kClusterPiecewise;
  /// True influence of each factor on the reward, length M+N.
  std::vector<double> factor_weights;
  /// Per-factor multiplier on the generated payload (empty = all 1). Large
  /// values on irrelevant factors make them dominate unweighted distances.
  std::vector<double> factor_scales;
  double noise_std = 0.0;
  std::size_t num_records = 1000;
  double label_ratio = 0.15;
  std::uint64_t seed = 0;
  /// Constant added to every reward.
  double reward_offset = 0.0;
  /// cluster_piecewise: mixture components per factor, their spread, and the
  /// box [-center_scale, center_scale] the centers are drawn from.
  std::size_t num_clusters = 4;
  double cluster_std = 0.15;
  double center_scale = 1.0;
  /// weighted_quadratic: coordinate standard deviation.
  double coord_std = 0.5;
  /// trajectory_chain: records per chain and per-step increment std.
  std::size_t chain_length = 50;
  double step_std = 0.05;

  void Validate() const {
    Require(factor_weights.size() == schema.num_factors(), ErrorCode::kInfeasibleSpec,
            "factor_weights length must equal the number of factors");
    Require(factor_scales.empty() || factor_scales.size() == schema.num_factors(),
            ErrorCode::kInfeasibleSpec, "factor_scales length must equal the number of factors");
    Require(noise_std >= 0.0 && std::isfinite(noise_std), ErrorCode::kInfeasibleSpec,
            "noise_std must be >= 0");
    Require(label_ratio > 0.0 && label_ratio <= 1.0, ErrorCode::kInfeasibleSpec,
            "label_ratio must lie in (0, 1]");
    Require(num_records >= 2, ErrorCode::kInfeasibleSpec, "need at least 2 records");
    Require(NumLabeled() >= 2, ErrorCode::kInfeasibleSpec,
            "label_ratio * num_records must be >= 2");
    Require(num_clusters >= 1 && cluster_std >= 0.0 && coord_std >= 0.0 && step_std >= 0.0 &&
                chain_length >= 1,
            ErrorCode::kInfeasibleSpec, "invalid generator shape parameters");
  }

  double Scale(std::size_t d) const { return factor_scales.empty() ? 1.0 : factor_scales[d]; }

  std::size_t NumLabeled() const {
    return static_cast<std::size_t>(std::llround(label_ratio * static_cast<double>(num_records)));
  }
};

struct SyntheticDataset {
  PartiallyLabeledDataset dataset;
  /// Reward of every record, labeled or not.
  std::vector<double> ground_truth;
};

namespace synth_detail {

// Independent generator streams derived from one seed, so that record
// payloads do not change when only the label ratio changes.
inline std::mt19937_64 Stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

inline double SquaredNorm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace synth_detail

/// Factor block d of a record (sub-state or sub-action).
inline std::span<const double> FactorBlock(const StateActionRecord& r, const FactorSchema& schema,
                                           std::size_t d) {
  const auto& vec = schema.is_state_factor(d) ? r.state : r.action;
  return std::span(vec).subspan(schema.offset(d), schema.factor(d).dim);
}

inline SyntheticDataset GenerateSynthetic(const SyntheticTaskSpec& spec) {
  spec.Validate();
  const auto& schema = spec.schema;
  const std::size_t z = spec.num_records;
  const std::size_t nf = schema.num_factors();
  auto payload_rng = synth_detail::Stream(spec.seed, 1);
  auto noise_rng = synth_detail::Stream(spec.seed, 2);
  auto label_rng = synth_detail::Stream(spec.seed, 3);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<StateActionRecord> records(z);
  for (auto& r : records) {
    r.state.resize(schema.state_dim());
    r.action.resize(schema.action_dim());
  }
  auto block = [&](StateActionRecord& r, std::size_t d) {
    auto& vec = schema.is_state_factor(d) ? r.state : r.action;
    return std::span(vec).subspan(schema.offset(d), schema.factor(d).dim);
  };
  std::vector<double> truth(z, spec.reward_offset);

  switch (spec.reward_model) {
    case RewardModel::kClusterPiecewise: {
      std::uniform_real_distribution<double> box(-spec.center_scale, spec.center_scale);
      std::uniform_real_distribution<double> level(-1.0, 1.0);
      std::uniform_int_distribution<std::size_t> pick(0, spec.num_clusters - 1);
      std::vector<std::vector<std::vector<double>>> centers(nf);
      std::vector<std::vector<double>> levels(nf);
      for (std::size_t d = 0; d < nf; ++d) {
        for (std::size_t c = 0; c < spec.num_clusters; ++c) {
          std::vector<double> center(schema.factor(d).dim);
          for (double& x : center) x = box(payload_rng);
          centers[d].push_back(std::move(center));
          levels[d].push_back(level(payload_rng));
        }
      }
      for (std::size_t i = 0; i < z; ++i) {
        for (std::size_t d = 0; d < nf; ++d) {
          const std::size_t c = pick(payload_rng);
          auto out = block(records[i], d);
          for (std::size_t k = 0; k < out.size(); ++k) {
            out[k] = spec.Scale(d) * (centers[d][c][k] + spec.cluster_std * gauss(payload_rng));
          }
          truth[i] += spec.factor_weights[d] * levels[d][c];
        }
      }
      break;
    }
    case RewardModel::kWeightedQuadratic: {
      for (std::size_t i = 0; i < z; ++i) {
        for (std::size_t d = 0; d < nf; ++d) {
          auto out = block(records[i], d);
          for (double& x : out) x = spec.Scale(d) * spec.coord_std * gauss(payload_rng);
          truth[i] += spec.factor_weights[d] * synth_detail::SquaredNorm(out);
        }
      }
      break;
    }
    case RewardModel::kTrajectoryChain: {
      std::uniform_real_distribution<double> box(-spec.center_scale, spec.center_scale);
      for (std::size_t i = 0; i < z; ++i) {
        const bool chain_start = i % spec.chain_length == 0;
        for (std::size_t d = 0; d < nf; ++d) {
          auto out = block(records[i], d);
          if (chain_start) {
            for (double& x : out) x = spec.Scale(d) * box(payload_rng);
          } else {
            const auto prev = FactorBlock(records[i - 1], schema, d);
            for (std::size_t k = 0; k < out.size(); ++k) {
              out[k] = prev[k] + spec.Scale(d) * spec.step_std * gauss(payload_rng);
            }
          }
          truth[i] += spec.factor_weights[d] * synth_detail::SquaredNorm(out);
        }
      }
      break;
    }
  }
  if (spec.noise_std > 0.0) {
    for (double& t : truth) t += spec.noise_std * gauss(noise_rng);
  }

  std::vector<std::size_t> order(z);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), label_rng);
  const std::size_t zl = spec.NumLabeled();
  for (std::size_t k = 0; k < zl; ++k) records[order[k]].reward = truth[order[k]];

  return {PartiallyLabeledDataset(schema, std::move(records)), std::move(truth)};
}

/// Standardizes every state and action coordinate to zero mean and unit
/// variance over the dataset. Constant coordinates are only centered. Off by
/// default; the pipeline itself never rescales.
inline PartiallyLabeledDataset ZScoreCoordinates(const PartiallyLabeledDataset& dataset) {
  auto records = dataset.records();
  const double z = static_cast<double>(records.size());
  auto standardize = [&](auto member) {
    const std::size_t dim = (records.front().*member).size();
    for (std::size_t k = 0; k < dim; ++k) {
      double mean = 0.0;
      for (const auto& r : records) mean += (r.*member)[k];
      mean /= z;
      double var = 0.0;
      for (const auto& r : records) var += ((r.*member)[k] - mean) * ((r.*member)[k] - mean);
      const double sd = std::sqrt(var / z);
      for (auto& r : records) {
        (r.*member)[k] -= mean;
        if (sd > 0.0) (r.*member)[k] /= sd;
      }
    }
  };
  standardize(&StateActionRecord::state);
  standardize(&StateActionRecord::action);
  return PartiallyLabeledDataset(dataset.schema(), std::move(records));
}

inline double EvaluateMse(std::span<const double> inferred, std::span<const double> truth) {
  Require(inferred.size() == truth.size(), ErrorCode::kLengthMismatch,
          "inferred and truth lengths differ");
  Require(!inferred.empty(), ErrorCode::kEmpty, "MSE of an empty vector");
  double s = 0.0;
  for (std::size_t i = 0; i < inferred.size(); ++i) {
    const double e = inferred[i] - truth[i];
    s += e * e;
  }
  return s / static_cast<double>(inferred.size());
}

/// Splits the vectors into `batches` contiguous near-equal batches and
/// averages their MSEs.
inline double BatchedMse(std::span<const double> inferred, std::span<const double> truth,
                         std::size_t batches = 5) {
  Require(inferred.size() == truth.size(), ErrorCode::kLengthMismatch,
          "inferred and truth lengths differ");
  Require(!inferred.empty(), ErrorCode::kEmpty, "MSE of an empty vector");
  batches = std::clamp<std::size_t>(batches, 1, inferred.size());
  double total = 0.0;
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t lo = b * inferred.size() / batches;
    const std::size_t hi = (b + 1) * inferred.size() / batches;
    total += EvaluateMse(inferred.subspan(lo, hi - lo), truth.subspan(lo, hi - lo));
  }
  return total / static_cast<double>(batches);
}

/// Outcome of one pipeline run on one synthetic dataset.
struct TaskRun {
  double mse = 0.0;
  /// No unlabeled records: the MSE is zero by definition, not measured.
  bool vacuous = false;
};

inline TaskRun RunTask(const SyntheticTaskSpec& spec, const PipelineConfig& config,
                       std::size_t batches = 5) {
  const auto synth = GenerateSynthetic(spec);
  const auto& ds = synth.dataset;
  if (ds.num_unlabeled() == 0) return {0.0, true};
  const auto out = InferRewards(ds, config);
  std::vector<double> inferred;
  std::vector<double> truth;
  for (std::size_t i : ds.unlabeled_indices()) {
    inferred.push_back(*out.dataset.record(i).reward);
    truth.push_back(synth.ground_truth[i]);
  }
  return {BatchedMse(inferred, truth, batches), false};
}

// ---------------------------------------------------------------------------
// Sweeps.

struct SweepCell {
  std::string task;
  std::string axis;
  double axis_value = 0.0;
  std::string label;
  std::vector<double> per_seed;
  double mean = 0.0;
  double std = 0.0;
  bool vacuous = false;
};

struct SweepReport {
  std::string kind;
  std::vector<std::uint64_t> seeds;
  std::vector<SweepCell> cells;

  /// (max - min) / mean of the cell means of one task; 0 when all are 0.
  double Sensitivity(std::string_view task) const {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& c : cells) {
      if (c.task != task) continue;
      lo = std::min(lo, c.mean);
      hi = std::max(hi, c.mean);
      sum += c.mean;
      ++n;
    }
    if (n == 0 || sum == 0.0) return 0.0;
    return (hi - lo) / (sum / static_cast<double>(n));
  }

  const SweepCell* Find(std::string_view task, std::string_view label) const {
    for (const auto& c : cells) {
      if (c.task == task && c.label == label) return &c;
    }
    return nullptr;
  }
};

namespace synth_detail {

inline void Summarize(SweepCell& cell) {
  const double n = static_cast<double>(cell.per_seed.size());
  cell.mean = std::accumulate(cell.per_seed.begin(), cell.per_seed.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : cell.per_seed) ss += (v - cell.mean) * (v - cell.mean);
  cell.std = cell.per_seed.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
}

inline std::string FormatAxis(double v) {
  std::string s = std::to_string(v);
  s.erase(s.find_last_not_of('0') + 1);
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

inline SweepCell MakeCell(const std::string& task, const std::string& axis, double value) {
  SweepCell cell;
  cell.task = task;
  cell.axis = axis;
  cell.axis_value = value;
  cell.label = FormatAxis(value);
  return cell;
}

/// One job per (cell, seed); cells are filled in grid order afterwards.
struct Job {
  std::size_t cell;
  SyntheticTaskSpec spec;
  PipelineConfig config;
};

inline void RunJobs(std::vector<Job>& jobs, SweepReport& report, std::size_t parallel) {
  std::vector<TaskRun> runs(jobs.size());
  ParallelFor(jobs.size(), parallel, [&](std::size_t j) {
    auto cfg = jobs[j].config;
    cfg.jobs = 1;
    try {
      runs[j] = RunTask(jobs[j].spec, cfg);
    } catch (const Error& e) {
      const auto& cell = report.cells[jobs[j].cell];
      throw Error(e.code(), "cell (" + cell.task + ", " + cell.axis + "=" + cell.label +
                                ", seed " + std::to_string(jobs[j].spec.seed) + "): " + e.what());
    }
  });
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    auto& cell = report.cells[jobs[j].cell];
    cell.per_seed.push_back(runs[j].mse);
    cell.vacuous = cell.vacuous || runs[j].vacuous;
  }
  for (auto& cell : report.cells) Summarize(cell);
}

}  // namespace synth_detail

/// MSE over tasks x label ratios. Ratios must be ascending.
inline SweepReport RunRatioSweep(const std::vector<SyntheticTaskSpec>& tasks,
                                 const std::vector<double>& ratios,
                                 const std::vector<std::uint64_t>& seeds,
                                 const PipelineConfig& config) {
  Require(std::is_sorted(ratios.begin(), ratios.end()), ErrorCode::kInvalidArgument,
          "ratios must be sorted ascending");
  Require(!seeds.empty() && !ratios.empty() && !tasks.empty(), ErrorCode::kInvalidArgument,
          "sweep needs tasks, ratios, and seeds");
  SweepReport report{"ratio", seeds, {}};
  std::vector<synth_detail::Job> jobs;
  for (const auto& task : tasks) {
    for (double ratio : ratios) {
      report.cells.push_back(synth_detail::MakeCell(task.name, "label_ratio", ratio));
      for (auto seed : seeds) {
        auto spec = task;
        spec.label_ratio = ratio;
        spec.seed = seed;
        jobs.push_back({report.cells.size() - 1, spec, config});
      }
    }
  }
  synth_detail::RunJobs(jobs, report, config.jobs);
  return report;
}

/// MSE over tasks x p-norm exponents.
inline SweepReport RunNormSweep(const std::vector<SyntheticTaskSpec>& tasks,
                                const std::vector<double>& p_values,
                                const std::vector<std::uint64_t>& seeds,
                                const PipelineConfig& config) {
  Require(!seeds.empty() && !p_values.empty() && !tasks.empty(), ErrorCode::kInvalidArgument,
          "sweep needs tasks, p values, and seeds");
  for (double p : p_values) DistanceConfig{p}.Validate();
  SweepReport report{"norm", seeds, {}};
  std::vector<synth_detail::Job> jobs;
  for (const auto& task : tasks) {
    for (double p : p_values) {
      report.cells.push_back(synth_detail::MakeCell(task.name, "p", p));
      for (auto seed : seeds) {
        auto spec = task;
        spec.seed = seed;
        auto cfg = config;
        cfg.distance.p = p;
        jobs.push_back({report.cells.size() - 1, spec, cfg});
      }
    }
  }
  synth_detail::RunJobs(jobs, report, config.jobs);
  return report;
}

/// Schema for one of the four factorization methods:
///   1: states and actions factored, 2: states factored + one action factor,
///   3: one state factor + actions factored, 4: one state + one action factor.
/// Collapsing concatenates factor blocks, so record payloads are unchanged.
inline FactorSchema CollapsedSchema(const FactorSchema& schema, int method) {
  Require(method >= 1 && method <= 4, ErrorCode::kInvalidArgument, "method must be 1..4");
  auto merge = [](const std::vector<FactorDescriptor>& fs, const std::string& name) {
    std::size_t dim = 0;
    for (const auto& f : fs) dim += f.dim;
    return std::vector<FactorDescriptor>{{name, dim}};
  };
  const bool split_states = method == 1 || method == 2;
  const bool split_actions = method == 1 || method == 3;
  return FactorSchema(split_states ? schema.state_factors() : merge(schema.state_factors(), "state"),
                      split_actions ? schema.action_factors()
                                    : merge(schema.action_factors(), "action"));
}

/// MSE of factorization methods 1-4 on one task. The reward is always
/// generated from the task's own (full) factorization.
inline SweepReport RunFactorizationAblation(const SyntheticTaskSpec& task,
                                            const std::vector<std::uint64_t>& seeds,
                                            const PipelineConfig& config) {
  const auto& schema = task.schema;
  const std::size_t m = schema.num_state_factors();
  const std::size_t n = schema.num_action_factors();
  Require((m >= 2 && n >= 2) || (m == 1 && n == 1), ErrorCode::kInsufficientFactors,
          "ablation needs M >= 2 and N >= 2 (or M = N = 1, where all methods coincide)");
  Require(!seeds.empty(), ErrorCode::kInvalidArgument, "sweep needs seeds");
  SweepReport report{"ablation", seeds, {}};
  for (int method = 1; method <= 4; ++method) {
    report.cells.push_back(synth_detail::MakeCell(task.name, "method", method));
  }
  // Generate each dataset once, then rerun the pipeline under each schema.
  std::vector<SyntheticDataset> data;
  for (auto seed : seeds) {
    auto spec = task;
    spec.seed = seed;
    data.push_back(GenerateSynthetic(spec));
  }
  std::vector<TaskRun> runs(4 * seeds.size());
  ParallelFor(runs.size(), config.jobs, [&](std::size_t j) {
    const int method = static_cast<int>(j / seeds.size()) + 1;
    const auto& synth = data[j % seeds.size()];
    PartiallyLabeledDataset ds(CollapsedSchema(schema, method), synth.dataset.records());
    auto cfg = config;
    cfg.jobs = 1;
    if (ds.num_unlabeled() == 0) {
      runs[j] = {0.0, true};
      return;
    }
    const auto out = InferRewards(ds, cfg);
    std::vector<double> inferred;
    std::vector<double> truth;
    for (std::size_t i : ds.unlabeled_indices()) {
      inferred.push_back(*out.dataset.record(i).reward);
      truth.push_back(synth.ground_truth[i]);
    }
    runs[j] = {BatchedMse(inferred, truth), false};
  });
  for (std::size_t j = 0; j < runs.size(); ++j) {
    auto& cell = report.cells[j / seeds.size()];
    cell.per_seed.push_back(runs[j].mse);
    cell.vacuous = cell.vacuous || runs[j].vacuous;
  }
  for (auto& cell : report.cells) synth_detail::Summarize(cell);
  return report;
}

}  // namespace rewardprop

#endif  // REWARDPROP_SYNTHBENCH_HPP_
