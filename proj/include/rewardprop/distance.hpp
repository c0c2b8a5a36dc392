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

#ifndef REWARDPROP_DISTANCE_HPP_
#define REWARDPROP_DISTANCE_HPP_

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "rewardprop/dataset.hpp"
#include "rewardprop/error.hpp"

namespace rewardprop {

/// Norm used for every per-factor distance, sub-states and sub-actions alike.
struct DistanceConfig {
  double p = 2.0;

  void Validate() const {
    Require(std::isfinite(p) && p >= 1.0, ErrorCode::kInvalidArgument,
            "p-norm exponent must be >= 1, got " + std::to_string(p));
  }
};

/// ||x - y||_p over two equally sized blocks.
inline double PNormDistance(std::span<const double> x, std::span<const double> y, double p) {
  if (p == 2.0) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - y[i];
      s += d * d;
    }
    return std::sqrt(s);
  }
  if (p == 1.0) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - y[i]);
    return s;
  }
  // Scale by the largest coordinate so |d|^p cannot overflow.
  double scale = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) scale = std::max(scale, std::abs(x[i] - y[i]));
  if (scale == 0.0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::pow(std::abs(x[i] - y[i]) / scale, p);
  return scale * std::pow(s, 1.0 / p);
}

/// Multi-factor distance vector: one p-norm per sub-state followed by one per
/// sub-action, length M + N. Writes into `out`.
inline void FactorDistancesInto(const StateActionRecord& a, const StateActionRecord& b,
                                const FactorSchema& schema, double p,
                                std::span<double> out) {
  std::size_t off = 0;
  std::size_t d = 0;
  for (const auto& f : schema.state_factors()) {
    out[d++] = PNormDistance(std::span(a.state).subspan(off, f.dim),
                             std::span(b.state).subspan(off, f.dim), p);
    off += f.dim;
  }
  off = 0;
  for (const auto& f : schema.action_factors()) {
    out[d++] = PNormDistance(std::span(a.action).subspan(off, f.dim),
                             std::span(b.action).subspan(off, f.dim), p);
    off += f.dim;
  }
}

inline std::vector<double> FactorDistances(const StateActionRecord& a,
                                           const StateActionRecord& b,
                                           const FactorSchema& schema,
                                           const DistanceConfig& config = {}) {
  config.Validate();
  for (const auto* r : {&a, &b}) {
    Require(r->state.size() == schema.state_dim() && r->action.size() == schema.action_dim(),
            ErrorCode::kSchemaMismatch, "record does not match schema layout");
  }
  std::vector<double> out(schema.num_factors());
  FactorDistancesInto(a, b, schema, config.p, out);
  return out;
}

}  // namespace rewardprop

#endif  // REWARDPROP_DISTANCE_HPP_
