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

// Transductive inference of the unlabeled rewards R_U from
//   R_U = W_UU R_U + W_UL R_L,
// either by fixed-point iteration from R_U = 0 or by solving
// (I - W_UU) R_U = W_UL R_L with an LU factorization.

#ifndef REWARDPROP_INFERENCE_HPP_
#define REWARDPROP_INFERENCE_HPP_

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rewardprop/error.hpp"
#include "rewardprop/graph.hpp"
#include "rewardprop/matrix.hpp"

namespace rewardprop {

enum class InferenceMethod { kIterative, kDirect, kAuto };

inline std::string_view MethodName(InferenceMethod m) {
  switch (m) {
    case InferenceMethod::kIterative: return "iterative";
    case InferenceMethod::kDirect: return "direct";
    case InferenceMethod::kAuto: return "auto";
  }
  return "auto";
}

inline InferenceMethod ParseMethod(std::string_view s) {
  if (s == "iterative") return InferenceMethod::kIterative;
  if (s == "direct") return InferenceMethod::kDirect;
  if (s == "auto") return InferenceMethod::kAuto;
  Fail(ErrorCode::kInvalidArgument, "unknown inference method '" + std::string(s) + "'");
}

struct InferenceConfig {
  InferenceMethod method = InferenceMethod::kAuto;
  std::size_t max_iters = 10000;
  /// Iterative: stop when the inf-norm of successive iterates drops below tol.
  /// Both methods: the fixed-point residual must end below tol.
  double tol = 1e-10;
  /// kAuto uses the direct solver up to this many unlabeled nodes.
  std::size_t direct_size_cap = 4096;
  /// Keep the per-iteration step norms in the result.
  bool record_trace = false;

  void Validate() const {
    Require(tol > 0.0, ErrorCode::kInvalidArgument, "tol must be > 0");
    Require(max_iters >= 1, ErrorCode::kInvalidArgument, "max_iters must be >= 1");
  }
};

struct InferenceResult {
  std::vector<double> rewards_u;
  std::size_t iterations_used = 0;
  double residual = 0.0;
  /// Max row sum of W_UU.
  double contraction_bound = 0.0;
  InferenceMethod method = InferenceMethod::kDirect;
  std::vector<double> step_norms;
};

/// ||R_U - (W_UU R_U + W_UL R_L)||_inf
inline double FixedPointResidual(const Matrix& w_uu, const Matrix& w_ul,
                                 std::span<const double> r_l, std::span<const double> r_u) {
  const auto a = Multiply(w_uu, r_u);
  const auto b = Multiply(w_ul, r_l);
  double m = 0.0;
  for (std::size_t i = 0; i < r_u.size(); ++i) m = std::max(m, std::abs(r_u[i] - a[i] - b[i]));
  return m;
}

namespace inference_detail {

inline void CheckBlocks(const Matrix& w_uu, const Matrix& w_ul, std::span<const double> r_l) {
  Require(w_ul.cols() > 0 && !r_l.empty(), ErrorCode::kNoLabeledNodes,
          "inference needs at least one labeled node");
  Require(w_uu.rows() > 0, ErrorCode::kNoUnlabeledNodes, "no unlabeled nodes to infer");
  Require(w_uu.rows() == w_uu.cols() && w_ul.rows() == w_uu.rows() && w_ul.cols() == r_l.size(),
          ErrorCode::kLengthMismatch, "block shapes disagree");
}

}  // namespace inference_detail

/// Dense LU factorization with partial pivoting (Eigen). Fails with
/// SingularSystem when a pivot falls below `pivot_floor`.
class LuFactorization {
 public:
  explicit LuFactorization(const Matrix& a, double pivot_floor = 1e-14) {
    Require(a.cols() == a.rows(), ErrorCode::kLengthMismatch, "LU needs a square matrix");
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const auto n = static_cast<Eigen::Index>(a.rows());
    lu_.compute(Eigen::Map<const RowMajor>(a.data().data(), n, n));
    const auto& f = lu_.matrixLU();
    for (Eigen::Index k = 0; k < n; ++k) {
      if (std::abs(f(k, k)) < pivot_floor) {
        Fail(ErrorCode::kSingularSystem, "pivot " + std::to_string(std::abs(f(k, k))) +
                                             " below floor at column " + std::to_string(k));
      }
    }
  }

  std::vector<double> Solve(std::span<const double> b) const {
    const auto n = lu_.matrixLU().rows();
    Require(static_cast<Eigen::Index>(b.size()) == n, ErrorCode::kLengthMismatch,
            "right-hand side length differs from the system size");
    std::vector<double> x(b.size());
    Eigen::Map<Eigen::VectorXd>(x.data(), n) =
        lu_.solve(Eigen::Map<const Eigen::VectorXd>(b.data(), n));
    return x;
  }

 private:
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

/// Fixed-point iteration R <- W_UU R + W_UL R_L from R = 0. iterations_used
/// counts the updates applied to the returned iterate.
inline InferenceResult PropagateIterativeBlocks(const Matrix& w_uu, const Matrix& w_ul,
                                                std::span<const double> r_l,
                                                const InferenceConfig& config = {}) {
  config.Validate();
  inference_detail::CheckBlocks(w_uu, w_ul, r_l);
  InferenceResult result;
  result.method = InferenceMethod::kIterative;
  result.contraction_bound = MaxRowSum(w_uu);
  Require(result.contraction_bound < 1.0, ErrorCode::kNotContractive,
          "max row sum of W_UU is " + std::to_string(result.contraction_bound) +
              "; some unlabeled node carries no weight to labeled nodes");
  const auto source = Multiply(w_ul, r_l);
  std::vector<double> r(source.size(), 0.0);
  std::vector<double> next(source.size());
  // The step norm ||W_UU r + b - r|| is the residual of the current iterate,
  // so iteration stops on an iterate already certified below tol.
  bool converged = false;
  for (std::size_t t = 0; t <= config.max_iters; ++t) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      const auto row = w_uu.row(i);
      double s = source[i];
      for (std::size_t j = 0; j < r.size(); ++j) s += row[j] * r[j];
      next[i] = s;
    }
    const double step = InfNormDiff(next, r);
    if (config.record_trace) result.step_norms.push_back(step);
    result.iterations_used = t;
    if (step < config.tol) {
      converged = true;
      break;
    }
    r.swap(next);
  }
  Require(converged, ErrorCode::kMaxItersExceeded,
          "no convergence within " + std::to_string(config.max_iters) + " iterations");
  result.residual = FixedPointResidual(w_uu, w_ul, r_l, r);
  result.rewards_u = std::move(r);
  return result;
}

/// Solves (I - W_UU) R_U = W_UL R_L directly. Blocks need not come from a
/// row-stochastic W; up to three refinement sweeps run while the residual
/// exceeds `tol`.
inline InferenceResult SolveFixedPointBlocks(const Matrix& w_uu, const Matrix& w_ul,
                                             std::span<const double> r_l, double tol = 1e-10) {
  inference_detail::CheckBlocks(w_uu, w_ul, r_l);
  const std::size_t n = w_uu.rows();
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a(i, j) = (i == j ? 1.0 : 0.0) - w_uu(i, j);
  }
  const LuFactorization lu(a);
  const auto source = Multiply(w_ul, r_l);
  InferenceResult result;
  result.method = InferenceMethod::kDirect;
  result.contraction_bound = MaxRowSum(w_uu);
  result.rewards_u = lu.Solve(source);
  result.residual = FixedPointResidual(w_uu, w_ul, r_l, result.rewards_u);
  for (int sweep = 0; sweep < 3 && result.residual >= tol; ++sweep) {
    // r = b - (I - W_UU) x
    const auto wx = Multiply(w_uu, result.rewards_u);
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = source[i] - result.rewards_u[i] + wx[i];
    const auto dx = lu.Solve(rhs);
    for (std::size_t i = 0; i < n; ++i) result.rewards_u[i] += dx[i];
    result.residual = FixedPointResidual(w_uu, w_ul, r_l, result.rewards_u);
  }
  return result;
}

inline InferenceResult PropagateIterative(const RewardGraph& graph, std::span<const double> r_l,
                                          const InferenceConfig& config = {}) {
  Require(!graph.labeled().empty(), ErrorCode::kNoLabeledNodes, "slice has no labeled nodes");
  Require(!graph.unlabeled().empty(), ErrorCode::kNoUnlabeledNodes,
          "slice has no unlabeled nodes");
  return PropagateIterativeBlocks(graph.UU(), graph.UL(), r_l, config);
}

inline InferenceResult SolveFixedPoint(const RewardGraph& graph, std::span<const double> r_l,
                                       double tol = 1e-10) {
  Require(!graph.labeled().empty(), ErrorCode::kNoLabeledNodes, "slice has no labeled nodes");
  Require(!graph.unlabeled().empty(), ErrorCode::kNoUnlabeledNodes,
          "slice has no unlabeled nodes");
  return SolveFixedPointBlocks(graph.UU(), graph.UL(), r_l, tol);
}

/// Dispatches on config.method; kAuto picks the direct solver for small Z_U.
inline InferenceResult Infer(const RewardGraph& graph, std::span<const double> r_l,
                             const InferenceConfig& config = {}) {
  config.Validate();
  auto method = config.method;
  if (method == InferenceMethod::kAuto) {
    method = graph.unlabeled().size() <= config.direct_size_cap ? InferenceMethod::kDirect
                                                                : InferenceMethod::kIterative;
  }
  return method == InferenceMethod::kDirect ? SolveFixedPoint(graph, r_l, config.tol)
                                            : PropagateIterative(graph, r_l, config);
}

}  // namespace rewardprop

#endif  // REWARDPROP_INFERENCE_HPP_
