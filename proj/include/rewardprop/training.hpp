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

// Fitting the shaping parameters on the labeled part of a slice.
//
// Each labeled node l is predicted from the other labeled nodes,
//   xi_l = sum_{k in L, k != l} q_lk r_k,
// and the loss is H = 1/(2 Z_L) sum_l (xi_l - r_l)^2. In the default mode q_lk
// is the row of W restricted to labeled peers and renormalized to sum to one,
// which equals a softmax of -f over the labeled peers alone. In strict mode
// q_lk = W_lk, normalized over every node of the slice.
//
// With g_lkd = d f_lk / d theta_d = 2 theta_d ell_lkd^2 the gradient is
//   dH/dtheta_d = (2 theta_d / Z_L) sum_l (r_l - xi_l) sum_k q_lk (r_k - xi_l) ell_lkd^2
// in the renormalized mode, and
//   dH/dtheta_d = (2 theta_d / Z_L) sum_l (r_l - xi_l)
//                 [sum_{k in L} W_lk r_k ell_lkd^2 - xi_l sum_j W_lj ell_ljd^2]
// in strict mode.

#ifndef REWARDPROP_TRAINING_HPP_
#define REWARDPROP_TRAINING_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rewardprop/dataset.hpp"
#include "rewardprop/distance.hpp"
#include "rewardprop/error.hpp"
#include "rewardprop/graph.hpp"
#include "rewardprop/matrix.hpp"

namespace rewardprop {

struct TrainConfig {
  /// Initial step; the line search halves it as needed.
  double learning_rate = 10.0;
  std::size_t max_iters = 500;
  double grad_tol = 1e-6;
  double init_theta = 1.0;
  /// Uniform jitter in [-init_jitter, init_jitter] added to the initial theta.
  double init_jitter = 0.0;
  std::uint64_t seed = 0;
  /// Renormalize labeled-peer weights when predicting xi_l. Off reproduces
  /// the raw row weights of W (strict mode).
  bool renormalize_peers = true;
  /// Single shared theta for all factors; dH/dt is the sum of the per-factor
  /// components.
  bool tie_theta = false;
  bool backtracking = true;
  std::size_t max_halvings = 30;

  void Validate() const {
    Require(learning_rate > 0.0 && std::isfinite(learning_rate), ErrorCode::kInvalidArgument,
            "learning_rate must be > 0");
    Require(max_iters >= 1, ErrorCode::kInvalidArgument, "max_iters must be >= 1");
    Require(grad_tol > 0.0, ErrorCode::kInvalidArgument, "grad_tol must be > 0");
    Require(std::isfinite(init_theta) && std::isfinite(init_jitter) && init_jitter >= 0.0,
            ErrorCode::kInvalidArgument, "initial theta must be finite");
  }
};

struct TrainReport {
  ShapingParams initial_params;
  ShapingParams final_params;
  std::vector<double> loss_trace;
  std::size_t iterations_used = 0;
  bool converged = false;
  double final_grad_norm = 0.0;
  std::string stop_reason;
};

inline ShapingParams InitialParams(std::size_t num_factors, const TrainConfig& config) {
  auto params = ShapingParams::Uniform(num_factors, config.init_theta);
  if (config.init_jitter > 0.0) {
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> u(-config.init_jitter, config.init_jitter);
    const double shared = config.tie_theta ? u(rng) : 0.0;
    for (double& t : params.theta) t += config.tie_theta ? shared : u(rng);
  }
  return params;
}

// ---------------------------------------------------------------------------
// Graph-level evaluation (operates on an assembled W).

/// Predicted reward of the labeled node at position `l` of graph.labeled().
inline double PredictedReward(const RewardGraph& graph, std::span<const double> labels,
                              std::size_t l, bool renormalize = true) {
  const auto& lab = graph.labeled();
  Require(lab.size() >= 2, ErrorCode::kTooFewLabels,
          "predicted reward needs at least 2 labeled nodes");
  Require(labels.size() == lab.size(), ErrorCode::kLengthMismatch,
          "label vector length differs from labeled node count");
  Require(l < lab.size(), ErrorCode::kInvalidArgument, "labeled position out of range");
  const auto row = graph.weights().row(lab[l]);
  double num = 0.0;
  double mass = 0.0;
  for (std::size_t k = 0; k < lab.size(); ++k) {
    if (k == l) continue;
    num += row[lab[k]] * labels[k];
    mass += row[lab[k]];
  }
  if (!renormalize) return num;
  // Every labeled peer underflowed to zero weight: fall back to the uniform
  // peer average, the limit of the renormalized weights.
  if (mass <= 0.0) {
    double s = 0.0;
    for (std::size_t k = 0; k < lab.size(); ++k) {
      if (k != l) s += labels[k];
    }
    return s / static_cast<double>(lab.size() - 1);
  }
  return num / mass;
}

inline double Loss(const RewardGraph& graph, std::span<const double> labels,
                   bool renormalize = true) {
  const std::size_t zl = graph.labeled().size();
  Require(zl >= 2, ErrorCode::kTooFewLabels, "loss needs at least 2 labeled nodes");
  double h = 0.0;
  for (std::size_t l = 0; l < zl; ++l) {
    const double e = PredictedReward(graph, labels, l, renormalize) - labels[l];
    h += e * e;
  }
  return h / (2.0 * static_cast<double>(zl));
}

// ---------------------------------------------------------------------------
// Cached training objective: squared per-factor distances from every labeled
// node to its candidate peers are computed once, so each loss or gradient
// evaluation costs O(Z_L * peers * (M+N)).

class TrainingObjective {
 public:
  TrainingObjective(const Slice& slice, const DistanceConfig& dconfig, bool renormalize)
      : renormalize_(renormalize),
        d_(slice.schema().num_factors()),
        labels_(slice.labels()) {
    dconfig.Validate();
    const auto& lab = slice.labeled();
    Require(lab.size() >= 2, ErrorCode::kTooFewLabels,
            "training needs at least 2 labeled nodes, slice has " + std::to_string(lab.size()));
    zl_ = lab.size();
    if (renormalize_) {
      cols_ = lab;
    } else {
      cols_.resize(slice.size());
      for (std::size_t j = 0; j < slice.size(); ++j) cols_[j] = j;
    }
    // Column position of each labeled node inside cols_.
    label_col_.resize(zl_);
    for (std::size_t l = 0; l < zl_; ++l) {
      label_col_[l] = renormalize_ ? l : lab[l];
    }
    sq_.assign(zl_ * cols_.size() * d_, 0.0);
    for (std::size_t l = 0; l < zl_; ++l) {
      for (std::size_t c = 0; c < cols_.size(); ++c) {
        if (cols_[c] == lab[l]) continue;
        auto out = std::span(sq_).subspan((l * cols_.size() + c) * d_, d_);
        FactorDistancesInto(slice.node(lab[l]), slice.node(cols_[c]), slice.schema(),
                            dconfig.p, out);
        for (double& v : out) v *= v;
      }
    }
  }

  std::size_t num_factors() const { return d_; }
  std::size_t num_labeled() const { return zl_; }
  std::span<const double> labels() const { return labels_; }

  double Loss(const ShapingParams& params) const { return Evaluate(params, nullptr); }

  /// Returns H and writes dH/dtheta into `grad`.
  double LossAndGradient(const ShapingParams& params, std::vector<double>& grad) const {
    grad.assign(d_, 0.0);
    return Evaluate(params, &grad);
  }

 private:
  std::span<const double> Sq(std::size_t l, std::size_t c) const {
    return std::span(sq_).subspan((l * cols_.size() + c) * d_, d_);
  }

  double Evaluate(const ShapingParams& params, std::vector<double>* grad) const {
    params.Validate(d_);
    std::vector<double> theta2(d_);
    for (std::size_t d = 0; d < d_; ++d) theta2[d] = params.theta[d] * params.theta[d];
    const std::size_t nc = cols_.size();
    std::vector<double> w(nc);
    std::vector<double> acc_r(d_);
    std::vector<double> acc_all(d_);
    double h = 0.0;
    for (std::size_t l = 0; l < zl_; ++l) {
      const std::size_t self = renormalize_ ? l : cols_[label_col_[l]];
      // Stabilized softmax over the candidate peers of l.
      double m = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < nc; ++c) {
        if (c == self) continue;
        const auto sq = Sq(l, c);
        double f = 0.0;
        for (std::size_t d = 0; d < d_; ++d) f += theta2[d] * sq[d];
        w[c] = f;
        m = std::min(m, f);
      }
      double z = 0.0;
      for (std::size_t c = 0; c < nc; ++c) {
        if (c == self) {
          w[c] = 0.0;
          continue;
        }
        w[c] = std::exp(-(w[c] - m));
        z += w[c];
      }
      for (double& v : w) v /= z;

      // Renormalized weights sum to one, so r_l - xi_l = sum_k q_lk (r_l - r_k);
      // this form is exactly zero when all labels agree.
      double resid = 0.0;
      for (std::size_t k = 0; k < zl_; ++k) {
        if (k == l) continue;
        resid += w[label_col_[k]] * (renormalize_ ? labels_[l] - labels_[k] : -labels_[k]);
      }
      if (!renormalize_) resid += labels_[l];
      const double xi = labels_[l] - resid;
      h += resid * resid;
      if (grad == nullptr || resid == 0.0) continue;

      std::fill(acc_r.begin(), acc_r.end(), 0.0);
      if (renormalize_) {
        for (std::size_t k = 0; k < zl_; ++k) {
          if (k == l) continue;
          const double coef = w[k] * (labels_[k] - xi);
          const auto sq = Sq(l, k);
          for (std::size_t d = 0; d < d_; ++d) acc_r[d] += coef * sq[d];
        }
      } else {
        std::fill(acc_all.begin(), acc_all.end(), 0.0);
        for (std::size_t c = 0; c < nc; ++c) {
          if (c == self) continue;
          const auto sq = Sq(l, c);
          for (std::size_t d = 0; d < d_; ++d) acc_all[d] += w[c] * sq[d];
        }
        for (std::size_t k = 0; k < zl_; ++k) {
          if (k == l) continue;
          const double coef = w[label_col_[k]] * labels_[k];
          const auto sq = Sq(l, label_col_[k]);
          for (std::size_t d = 0; d < d_; ++d) acc_r[d] += coef * sq[d];
        }
        for (std::size_t d = 0; d < d_; ++d) acc_r[d] -= xi * acc_all[d];
      }
      for (std::size_t d = 0; d < d_; ++d) (*grad)[d] += resid * acc_r[d];
    }
    const double inv = 1.0 / static_cast<double>(zl_);
    if (grad != nullptr) {
      for (std::size_t d = 0; d < d_; ++d) (*grad)[d] *= 2.0 * params.theta[d] * inv;
    }
    return 0.5 * h * inv;
  }

  bool renormalize_;
  std::size_t d_;
  std::size_t zl_ = 0;
  std::vector<double> labels_;
  std::vector<std::size_t> cols_;
  std::vector<std::size_t> label_col_;
  std::vector<double> sq_;
};

/// Analytic dH/dtheta for the slice's labeled nodes.
inline std::vector<double> Gradient(const ShapingParams& params, const Slice& slice,
                                    const DistanceConfig& dconfig, bool renormalize = true) {
  Require(params.theta.size() == slice.schema().num_factors(), ErrorCode::kLengthMismatch,
          "shaping params length differs from factor count");
  TrainingObjective objective(slice, dconfig, renormalize);
  std::vector<double> grad;
  objective.LossAndGradient(params, grad);
  return grad;
}

/// Gradient descent on theta with a halving line search; W is implicitly
/// rebuilt at every evaluated theta.
inline TrainReport Train(const Slice& slice, const TrainConfig& config,
                         const DistanceConfig& dconfig) {
  config.Validate();
  TrainingObjective objective(slice, dconfig, config.renormalize_peers);
  TrainReport report;
  report.initial_params = InitialParams(objective.num_factors(), config);
  ShapingParams params = report.initial_params;

  std::vector<double> grad;
  const auto evaluate = [&](const ShapingParams& p) {
    const double h = objective.LossAndGradient(p, grad);
    if (config.tie_theta) {
      std::fill(grad.begin(), grad.end(), std::accumulate(grad.begin(), grad.end(), 0.0));
    }
    return h;
  };
  double loss = evaluate(params);
  Require(std::isfinite(loss), ErrorCode::kDivergenceDetected, "initial loss is not finite");
  report.loss_trace.push_back(loss);
  report.stop_reason = "max_iters";

  ShapingParams trial;
  for (std::size_t it = 0; it < config.max_iters; ++it) {
    report.iterations_used = it + 1;
    report.final_grad_norm = InfNorm(grad);
    if (report.final_grad_norm < config.grad_tol) {
      report.converged = true;
      report.stop_reason = "grad_tol";
      break;
    }
    double eta = config.learning_rate;
    bool accepted = false;
    double trial_loss = 0.0;
    const std::size_t attempts = config.backtracking ? config.max_halvings + 1 : 1;
    for (std::size_t a = 0; a < attempts; ++a, eta *= 0.5) {
      trial.theta = params.theta;
      for (std::size_t d = 0; d < grad.size(); ++d) trial.theta[d] -= eta * grad[d];
      trial_loss = objective.Loss(trial);
      if (!config.backtracking) {
        Require(std::isfinite(trial_loss), ErrorCode::kDivergenceDetected,
                "loss became non-finite at iteration " + std::to_string(it + 1));
        accepted = true;
        break;
      }
      if (std::isfinite(trial_loss) && trial_loss <= loss) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      report.stop_reason = "line_search_stalled";
      break;
    }
    params = trial;
    loss = evaluate(params);
    report.loss_trace.push_back(loss);
    report.final_grad_norm = InfNorm(grad);
  }
  if (report.stop_reason == "max_iters" && report.final_grad_norm < config.grad_tol) {
    report.converged = true;
    report.stop_reason = "grad_tol";
  }
  report.final_params = params;
  return report;
}

}  // namespace rewardprop

#endif  // REWARDPROP_TRAINING_HPP_
