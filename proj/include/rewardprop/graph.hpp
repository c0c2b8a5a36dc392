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

#ifndef REWARDPROP_GRAPH_HPP_
#define REWARDPROP_GRAPH_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rewardprop/dataset.hpp"
#include "rewardprop/dataset_io.hpp"
#include "rewardprop/distance.hpp"
#include "rewardprop/error.hpp"
#include "rewardprop/matrix.hpp"
#include "rewardprop/parallel.hpp"

namespace rewardprop {

/// One weight per factor for the reward-shaping function.
struct ShapingParams {
  std::vector<double> theta;

  static ShapingParams Uniform(std::size_t num_factors, double value = 1.0) {
    return {std::vector<double>(num_factors, value)};
  }

  void Validate(std::size_t num_factors) const {
    Require(theta.size() == num_factors, ErrorCode::kLengthMismatch,
            "shaping params have " + std::to_string(theta.size()) + " entries, schema has " +
                std::to_string(num_factors) + " factors");
    for (double t : theta) {
      Require(std::isfinite(t), ErrorCode::kNonFiniteValue, "non-finite shaping parameter");
    }
  }

  friend bool operator==(const ShapingParams&, const ShapingParams&) = default;
};

/// f(ell) = sum_d theta_d^2 * ell_d^2.
inline double ShapingValue(const ShapingParams& params, std::span<const double> ell) {
  Require(params.theta.size() == ell.size(), ErrorCode::kLengthMismatch,
          "shaping params and distance vector differ in length");
  double f = 0.0;
  for (std::size_t d = 0; d < ell.size(); ++d) {
    const double t = params.theta[d] * ell[d];
    f += t * t;
  }
  return f;
}

/// Row-stochastic propagation graph over one slice. W is stored in the
/// slice's own node order; block accessors gather the labeled-first view.
class RewardGraph {
 public:
  RewardGraph(Matrix weights, std::vector<std::size_t> labeled,
              std::vector<std::size_t> unlabeled)
      : w_(std::move(weights)), labeled_(std::move(labeled)), unlabeled_(std::move(unlabeled)) {}

  const Matrix& weights() const { return w_; }
  std::size_t size() const { return w_.rows(); }
  const std::vector<std::size_t>& labeled() const { return labeled_; }
  const std::vector<std::size_t>& unlabeled() const { return unlabeled_; }

  /// Permutation placing labeled nodes first.
  std::vector<std::size_t> node_order() const {
    std::vector<std::size_t> order = labeled_;
    order.insert(order.end(), unlabeled_.begin(), unlabeled_.end());
    return order;
  }

  Matrix Block(std::span<const std::size_t> rows, std::span<const std::size_t> cols) const {
    Matrix b(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto src = w_.row(rows[i]);
      auto dst = b.row(i);
      for (std::size_t j = 0; j < cols.size(); ++j) dst[j] = src[cols[j]];
    }
    return b;
  }

  Matrix LL() const { return Block(labeled_, labeled_); }
  Matrix LU() const { return Block(labeled_, unlabeled_); }
  Matrix UL() const { return Block(unlabeled_, labeled_); }
  Matrix UU() const { return Block(unlabeled_, unlabeled_); }

 private:
  Matrix w_;
  std::vector<std::size_t> labeled_;
  std::vector<std::size_t> unlabeled_;
};

struct GraphOptions {
  /// Keep only the k largest weights per row and renormalize; 0 keeps all.
  std::size_t top_k = 0;
  /// Added to every row's stabilization constant. The weights do not depend
  /// on it mathematically; exposed so tests can check that.
  double extra_shift = 0.0;
  std::size_t jobs = 1;
};

/// Row-wise softmax of -cost over j != i, with W_ii = 0. Each row subtracts
/// its smallest off-diagonal cost before exponentiating, so the largest
/// exponent is exp(0) and no row can become 0/0.
inline Matrix SoftmaxRows(const Matrix& cost, const GraphOptions& options = {}) {
  const std::size_t n = cost.rows();
  Matrix w(n, n);
  ParallelFor(n, options.jobs, [&](std::size_t i) {
    const auto c = cost.row(i);
    auto out = w.row(i);
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) m = std::min(m, c[j]);
    }
    m += options.extra_shift;
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      out[j] = std::exp(-(c[j] - m));
      z += out[j];
    }
    if (options.top_k > 0 && options.top_k < n - 1) {
      std::vector<double> vals;
      vals.reserve(n - 1);
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) vals.push_back(out[j]);
      }
      std::nth_element(vals.begin(), vals.begin() + (options.top_k - 1), vals.end(),
                       std::greater<>());
      const double cutoff = vals[options.top_k - 1];
      // Ties at the cutoff are resolved by index so exactly k entries survive.
      std::size_t above = 0;
      for (double v : vals) above += v > cutoff ? 1 : 0;
      std::size_t tie_budget = options.top_k - above;
      z = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        if (out[j] > cutoff || (out[j] == cutoff && tie_budget > 0)) {
          if (out[j] == cutoff) --tie_budget;
          z += out[j];
        } else {
          out[j] = 0.0;
        }
      }
    }
    for (std::size_t j = 0; j < n; ++j) out[j] = (j == i) ? 0.0 : out[j] / z;
  });
  return w;
}

/// Matrix of f_theta(ell(S_i, S_j)); the diagonal is left at zero.
inline Matrix ShapingCosts(const Slice& slice, const ShapingParams& params,
                           const DistanceConfig& config, std::size_t jobs = 1) {
  config.Validate();
  const auto& schema = slice.schema();
  params.Validate(schema.num_factors());
  const std::size_t n = slice.size();
  Matrix cost(n, n);
  ParallelFor(n, jobs, [&](std::size_t i) {
    std::vector<double> ell(schema.num_factors());
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      FactorDistancesInto(slice.node(i), slice.node(j), schema, config.p, ell);
      cost(i, j) = ShapingValue(params, ell);
    }
  });
  return cost;
}

inline RewardGraph BuildWeightMatrix(const Slice& slice, const ShapingParams& params,
                                     const DistanceConfig& config,
                                     const GraphOptions& options = {}) {
  Require(slice.size() >= 2, ErrorCode::kDegenerateSlice,
          "graph needs at least 2 nodes, slice has " + std::to_string(slice.size()));
  return RewardGraph(SoftmaxRows(ShapingCosts(slice, params, config, options.jobs), options),
                     slice.labeled(), slice.unlabeled());
}

// Dense matrix dump, little-endian:
//   magic "RPWM" | u8 version (=1) | u64 rows | u64 cols | f64[rows*cols] row-major
inline void WriteDenseMatrix(const Matrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(out.good(), ErrorCode::kIoFailure, "cannot open '" + path.string() + "'");
  out.write("RPWM", 4);
  io_detail::PutLe<std::uint8_t>(out, 1);
  io_detail::PutLe<std::uint64_t>(out, m.rows());
  io_detail::PutLe<std::uint64_t>(out, m.cols());
  for (double v : m.data()) io_detail::PutF64(out, v);
  Require(out.good(), ErrorCode::kIoFailure, "write to '" + path.string() + "' failed");
}

inline Matrix ReadDenseMatrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  Require(in.good(), ErrorCode::kIoFailure, "cannot open '" + path.string() + "'");
  char magic[4] = {};
  in.read(magic, 4);
  Require(in.gcount() == 4 && std::string(magic, 4) == "RPWM", ErrorCode::kMalformedHeader,
          "bad matrix magic");
  Require(io_detail::GetLe<std::uint8_t>(in) == 1, ErrorCode::kMalformedHeader,
          "unsupported matrix version");
  const auto rows = io_detail::GetLe<std::uint64_t>(in);
  const auto cols = io_detail::GetLe<std::uint64_t>(in);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = io_detail::GetF64(in);
  return m;
}

}  // namespace rewardprop

#endif  // REWARDPROP_GRAPH_HPP_
