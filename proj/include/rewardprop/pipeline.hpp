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

#ifndef REWARDPROP_PIPELINE_HPP_
#define REWARDPROP_PIPELINE_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rewardprop/dataset.hpp"
#include "rewardprop/distance.hpp"
#include "rewardprop/error.hpp"
#include "rewardprop/graph.hpp"
#include "rewardprop/inference.hpp"
#include "rewardprop/parallel.hpp"
#include "rewardprop/training.hpp"

namespace rewardprop {

struct PipelineConfig {
  TrainConfig train;
  DistanceConfig distance;
  InferenceConfig inference;
  GraphOptions graph;
  std::size_t slice_size = 10000;
  /// Number of labeled records copied into a label-free slice from its
  /// neighbours. 0 makes such a slice an error.
  std::size_t borrow_labels = 0;
  /// Concurrent slices.
  std::size_t jobs = 1;
};

struct SliceTiming {
  double train_seconds = 0.0;
  double build_seconds = 0.0;
  double solve_seconds = 0.0;
};

struct SliceReport {
  std::size_t index = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t num_labeled = 0;
  std::size_t num_unlabeled = 0;
  std::size_t num_borrowed = 0;
  ShapingParams params;
  std::optional<TrainReport> train;
  std::optional<InferenceResult> inference;
  SliceTiming timing;
  std::string note;
};

struct InferOutput {
  PartiallyLabeledDataset dataset;
  std::vector<SliceReport> slices;
};

namespace pipeline_detail {

inline double WholeVectorSquaredDistance(const StateActionRecord& a,
                                         const StateActionRecord& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.state.size(); ++i) s += (a.state[i] - b.state[i]) * (a.state[i] - b.state[i]);
  for (std::size_t i = 0; i < a.action.size(); ++i) s += (a.action[i] - b.action[i]) * (a.action[i] - b.action[i]);
  return s;
}

inline double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace pipeline_detail

/// Appends to `slice` the k labeled records of the adjacent slices closest to
/// it, where a candidate's distance is its smallest whole-vector Euclidean
/// distance to any record of the slice. Ties go to the lower dataset index.
inline void BorrowLabels(Slice& slice, const PartiallyLabeledDataset& dataset,
                         std::size_t slice_size, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> candidates;
  const std::size_t lo = slice.begin() >= slice_size ? slice.begin() - slice_size : 0;
  const std::size_t hi = std::min(dataset.size(), slice.end() + slice_size);
  for (std::size_t idx : dataset.labeled_indices()) {
    if (idx < lo || idx >= hi || (idx >= slice.begin() && idx < slice.end())) continue;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < slice.own_size(); ++i) {
      best = std::min(best, pipeline_detail::WholeVectorSquaredDistance(slice.node(i),
                                                                        dataset.record(idx)));
    }
    candidates.emplace_back(best, idx);
  }
  Require(!candidates.empty(), ErrorCode::kSliceWithoutLabels,
          "no labeled records in adjacent slices to borrow");
  const std::size_t take = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + take, candidates.end());
  for (std::size_t i = 0; i < take; ++i) slice.Borrow(dataset.record(candidates[i].second));
}

/// Trains and infers one slice. Fewer than two labeled nodes skips training
/// and keeps the initial parameters.
inline SliceReport ProcessSlice(const Slice& slice, const PipelineConfig& config) {
  using Clock = std::chrono::steady_clock;
  SliceReport report;
  report.begin = slice.begin();
  report.end = slice.end();
  report.num_labeled = slice.labeled().size();
  report.num_unlabeled = slice.unlabeled().size();
  report.num_borrowed = slice.num_borrowed();
  if (slice.unlabeled().empty()) {
    report.note = "fully labeled; nothing to infer";
    return report;
  }
  Require(!slice.labeled().empty(), ErrorCode::kSliceWithoutLabels, "slice has no labeled records");

  auto t0 = Clock::now();
  if (slice.labeled().size() >= 2) {
    report.train = Train(slice, config.train, config.distance);
    report.params = report.train->final_params;
  } else {
    report.params = InitialParams(slice.schema().num_factors(), config.train);
    report.note = "single labeled record; training skipped";
  }
  report.timing.train_seconds = pipeline_detail::Seconds(t0);

  t0 = Clock::now();
  const auto graph = BuildWeightMatrix(slice, report.params, config.distance, config.graph);
  report.timing.build_seconds = pipeline_detail::Seconds(t0);

  t0 = Clock::now();
  report.inference = Infer(graph, slice.labels(), config.inference);
  report.timing.solve_seconds = pipeline_detail::Seconds(t0);
  return report;
}

/// Sequential slices of `dataset`, with labels borrowed into label-free
/// slices when config.borrow_labels > 0.
inline std::vector<Slice> PrepareSlices(const PartiallyLabeledDataset& dataset,
                                        const PipelineConfig& config) {
  auto slices = SliceSequential(dataset, config.slice_size, config.borrow_labels > 0);
  for (std::size_t s = 0; s < slices.size(); ++s) {
    if (!slices[s].labeled().empty() || slices[s].unlabeled().empty()) continue;
    try {
      BorrowLabels(slices[s], dataset, config.slice_size, config.borrow_labels);
    } catch (const Error& e) {
      throw SliceError(s, e);
    }
  }
  return slices;
}

/// Infers every missing reward slice by slice. Labels present in the input
/// are carried over untouched.
inline InferOutput InferRewards(const PartiallyLabeledDataset& dataset,
                                const PipelineConfig& config) {
  config.train.Validate();
  config.distance.Validate();
  config.inference.Validate();
  if (dataset.num_unlabeled() == 0) return {dataset, {}};

  auto slices = PrepareSlices(dataset, config);

  std::vector<SliceReport> reports(slices.size());
  ParallelFor(slices.size(), config.jobs, [&](std::size_t s) {
    try {
      reports[s] = ProcessSlice(slices[s], config);
      reports[s].index = s;
    } catch (const SliceError&) {
      throw;
    } catch (const Error& e) {
      throw SliceError(s, e);
    }
  });

  std::vector<std::pair<std::size_t, double>> fills;
  fills.reserve(dataset.num_unlabeled());
  for (std::size_t s = 0; s < slices.size(); ++s) {
    if (!reports[s].inference) continue;
    const auto& unlabeled = slices[s].unlabeled();
    const auto& r_u = reports[s].inference->rewards_u;
    for (std::size_t u = 0; u < unlabeled.size(); ++u) {
      // Borrowed nodes are always labeled, so every unlabeled node is owned.
      fills.emplace_back(slices[s].begin() + unlabeled[u], r_u[u]);
    }
  }
  return {dataset.WithRewards(fills), std::move(reports)};
}

}  // namespace rewardprop

#endif  // REWARDPROP_PIPELINE_HPP_
