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

#ifndef REWARDPROP_DATASET_HPP_
#define REWARDPROP_DATASET_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rewardprop/error.hpp"

namespace rewardprop {

struct FactorDescriptor {
  std::string name;
  std::size_t dim = 1;

  friend bool operator==(const FactorDescriptor&, const FactorDescriptor&) = default;
};

/// Layout of a state vector as M sub-states and an action vector as N
/// sub-actions. Factor index d in [0, M) addresses a sub-state, d in [M, M+N)
/// a sub-action.
class FactorSchema {
 public:
  FactorSchema() = default;
  FactorSchema(std::vector<FactorDescriptor> state_factors,
               std::vector<FactorDescriptor> action_factors)
      : state_factors_(std::move(state_factors)),
        action_factors_(std::move(action_factors)) {
    Validate();
  }

  const std::vector<FactorDescriptor>& state_factors() const { return state_factors_; }
  const std::vector<FactorDescriptor>& action_factors() const { return action_factors_; }

  std::size_t num_state_factors() const { return state_factors_.size(); }
  std::size_t num_action_factors() const { return action_factors_.size(); }
  std::size_t num_factors() const { return state_factors_.size() + action_factors_.size(); }

  std::size_t state_dim() const { return SumDims(state_factors_); }
  std::size_t action_dim() const { return SumDims(action_factors_); }

  bool is_state_factor(std::size_t d) const { return d < state_factors_.size(); }

  const FactorDescriptor& factor(std::size_t d) const {
    return is_state_factor(d) ? state_factors_[d]
                              : action_factors_[d - state_factors_.size()];
  }

  /// Offset of factor d inside its own (state or action) vector.
  std::size_t offset(std::size_t d) const {
    std::size_t off = 0;
    if (is_state_factor(d)) {
      for (std::size_t i = 0; i < d; ++i) off += state_factors_[i].dim;
    } else {
      for (std::size_t i = 0; i < d - state_factors_.size(); ++i) {
        off += action_factors_[i].dim;
      }
    }
    return off;
  }

  friend bool operator==(const FactorSchema&, const FactorSchema&) = default;

 private:
  static std::size_t SumDims(const std::vector<FactorDescriptor>& fs) {
    std::size_t n = 0;
    for (const auto& f : fs) n += f.dim;
    return n;
  }

  void Validate() const {
    Require(num_factors() >= 1, ErrorCode::kMalformedHeader,
            "schema must declare at least one factor");
    std::set<std::string> names;
    for (std::size_t d = 0; d < num_factors(); ++d) {
      const auto& f = factor(d);
      Require(f.dim >= 1, ErrorCode::kMalformedHeader,
              "factor '" + f.name + "' has dimension 0");
      Require(names.insert(f.name).second, ErrorCode::kMalformedHeader,
              "duplicate factor name '" + f.name + "'");
    }
  }

  std::vector<FactorDescriptor> state_factors_;
  std::vector<FactorDescriptor> action_factors_;
};

struct StateActionRecord {
  std::vector<double> state;
  std::vector<double> action;
  std::optional<double> reward;

  bool labeled() const { return reward.has_value(); }

  friend bool operator==(const StateActionRecord&, const StateActionRecord&) = default;
};

inline void ValidateRecord(const StateActionRecord& r, const FactorSchema& schema,
                           std::size_t index = 0) {
  const std::string where = "record " + std::to_string(index);
  Require(r.state.size() == schema.state_dim(), ErrorCode::kSchemaMismatch,
          where + ": state length " + std::to_string(r.state.size()) +
              ", schema expects " + std::to_string(schema.state_dim()));
  Require(r.action.size() == schema.action_dim(), ErrorCode::kSchemaMismatch,
          where + ": action length " + std::to_string(r.action.size()) +
              ", schema expects " + std::to_string(schema.action_dim()));
  for (double v : r.state) {
    Require(std::isfinite(v), ErrorCode::kNonFiniteValue, where + ": non-finite state value");
  }
  for (double v : r.action) {
    Require(std::isfinite(v), ErrorCode::kNonFiniteValue, where + ": non-finite action value");
  }
  if (r.reward) {
    Require(std::isfinite(*r.reward), ErrorCode::kNonFiniteValue,
            where + ": non-finite reward");
  }
}

/// Ordered records plus the labeled/unlabeled partition derived from which
/// records carry a reward. Immutable once constructed.
class PartiallyLabeledDataset {
 public:
  PartiallyLabeledDataset(FactorSchema schema, std::vector<StateActionRecord> records)
      : schema_(std::move(schema)), records_(std::move(records)) {
    Require(!records_.empty(), ErrorCode::kEmptyDataset, "dataset has no records");
    for (std::size_t i = 0; i < records_.size(); ++i) {
      ValidateRecord(records_[i], schema_, i);
      (records_[i].labeled() ? labeled_ : unlabeled_).push_back(i);
    }
  }

  const FactorSchema& schema() const { return schema_; }
  const std::vector<StateActionRecord>& records() const { return records_; }
  const StateActionRecord& record(std::size_t i) const { return records_[i]; }
  std::size_t size() const { return records_.size(); }

  const std::vector<std::size_t>& labeled_indices() const { return labeled_; }
  const std::vector<std::size_t>& unlabeled_indices() const { return unlabeled_; }
  std::size_t num_labeled() const { return labeled_.size(); }
  std::size_t num_unlabeled() const { return unlabeled_.size(); }

  /// Copy with rewards attached at the given unlabeled positions.
  PartiallyLabeledDataset WithRewards(
      std::span<const std::pair<std::size_t, double>> fills) const {
    auto records = records_;
    for (const auto& [i, r] : fills) {
      Require(i < records.size(), ErrorCode::kInvalidArgument, "fill index out of range");
      records[i].reward = r;
    }
    return PartiallyLabeledDataset(schema_, std::move(records));
  }

  friend bool operator==(const PartiallyLabeledDataset& a,
                         const PartiallyLabeledDataset& b) {
    return a.schema_ == b.schema_ && a.records_ == b.records_;
  }

 private:
  FactorSchema schema_;
  std::vector<StateActionRecord> records_;
  std::vector<std::size_t> labeled_;
  std::vector<std::size_t> unlabeled_;
};

/// A contiguous range [begin, end) of a parent dataset viewed as its own node
/// set. Nodes 0..(end-begin) are the parent's records in order; borrowed
/// labeled records from neighbouring slices may be appended after them.
/// Holds non-owning pointers, so the parent must outlive the slice.
class Slice {
 public:
  Slice(const PartiallyLabeledDataset& parent, std::size_t begin, std::size_t end)
      : schema_(&parent.schema()), begin_(begin), end_(end) {
    Require(begin < end && end <= parent.size(), ErrorCode::kInvalidArgument,
            "slice range out of bounds");
    nodes_.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) AddNode(parent.record(i));
  }

  /// Free-standing node set, mainly for tests and synthetic graphs.
  Slice(const FactorSchema& schema, std::span<const StateActionRecord> records)
      : schema_(&schema), begin_(0), end_(records.size()) {
    for (std::size_t i = 0; i < records.size(); ++i) {
      ValidateRecord(records[i], schema, i);
      AddNode(records[i]);
    }
  }

  const FactorSchema& schema() const { return *schema_; }
  std::size_t begin() const { return begin_; }
  std::size_t end() const { return end_; }
  std::size_t own_size() const { return end_ - begin_; }
  std::size_t size() const { return nodes_.size(); }
  std::size_t num_borrowed() const { return nodes_.size() - own_size(); }

  const StateActionRecord& node(std::size_t i) const { return *nodes_[i]; }

  /// Local node indices, ascending.
  const std::vector<std::size_t>& labeled() const { return labeled_; }
  const std::vector<std::size_t>& unlabeled() const { return unlabeled_; }

  /// Rewards of the labeled nodes, in labeled() order.
  std::vector<double> labels() const {
    std::vector<double> r;
    r.reserve(labeled_.size());
    for (std::size_t i : labeled_) r.push_back(*nodes_[i]->reward);
    return r;
  }

  void Borrow(const StateActionRecord& labeled_record) {
    Require(labeled_record.labeled(), ErrorCode::kInvalidArgument,
            "only labeled records can be borrowed");
    AddNode(labeled_record);
  }

 private:
  void AddNode(const StateActionRecord& r) {
    (r.labeled() ? labeled_ : unlabeled_).push_back(nodes_.size());
    nodes_.push_back(&r);
  }

  const FactorSchema* schema_;
  std::size_t begin_;
  std::size_t end_;
  std::vector<const StateActionRecord*> nodes_;
  std::vector<std::size_t> labeled_;
  std::vector<std::size_t> unlabeled_;
};

/// Splits the dataset into ceil(Z / slice_size) contiguous slices. Unless
/// `allow_unlabeled` is set, a slice with no labeled record is an error.
inline std::vector<Slice> SliceSequential(const PartiallyLabeledDataset& dataset,
                                          std::size_t slice_size,
                                          bool allow_unlabeled = false) {
  Require(slice_size >= 2, ErrorCode::kInvalidArgument, "slice_size must be >= 2");
  std::vector<Slice> slices;
  slices.reserve((dataset.size() + slice_size - 1) / slice_size);
  for (std::size_t begin = 0; begin < dataset.size(); begin += slice_size) {
    const std::size_t end = std::min(dataset.size(), begin + slice_size);
    slices.emplace_back(dataset, begin, end);
    if (!allow_unlabeled && slices.back().labeled().empty()) {
      Fail(ErrorCode::kSliceWithoutLabels,
           "slice " + std::to_string(slices.size() - 1) + " [" + std::to_string(begin) +
               ", " + std::to_string(end) + ") has no labeled records");
    }
  }
  return slices;
}

}  // namespace rewardprop

#endif  // REWARDPROP_DATASET_HPP_
