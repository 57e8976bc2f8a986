#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace codafl {

struct ConvergenceParams {
  double mu = 0.1;           // strong convexity
  double eta = 0.1;          // learning rate
  int local_steps = 5;       // E
  double grad_bound = 0.1;   // G
  double sigma_sq = 1.0;     // stochastic-gradient variance bound
  double participants = 100; // U in sigma^2 / U
  double l_div = 1.0;        // divergence constant L_d
  double l_smooth = 1.0;     // the unnamed "L" multiplying L_d in the order bound
  double initial_gap = 1.0;  // F(w^0) - F(w*)

  double contraction() const { return 1.0 - mu * eta * static_cast<double>(local_steps); }

  void validate() const {
    require(mu > 0 && eta > 0 && local_steps >= 1 && grad_bound > 0 && sigma_sq > 0 && participants > 0 &&
                l_div > 0 && l_smooth > 0 && initial_gap > 0,
            ErrorCode::InvalidParameter, "convergence parameters must be strictly positive");
    const double rate = mu * eta * static_cast<double>(local_steps);
    require(rate < 1.0, ErrorCode::InvalidParameter, "mu * eta * E must be below 1");
  }
};

struct TaskSpec {
  int id = 0;
  std::string name;
  double target_accuracy = 0.5;
  double initial_loss = 1.0;
  double optimal_loss = 0.0;
  double model_size_bits = 0.5e6;

  double initial_gap() const { return initial_loss - optimal_loss; }

  void validate() const {
    require(target_accuracy > 0.0 && target_accuracy < 1.0, ErrorCode::InvalidParameter,
            "task " + std::to_string(id) + ": target accuracy must be in (0, 1)");
    require(optimal_loss >= 0.0 && optimal_loss < initial_loss, ErrorCode::InvalidParameter,
            "task " + std::to_string(id) + ": need 0 <= optimal_loss < initial_loss");
    require(model_size_bits > 0.0, ErrorCode::InvalidParameter, "model size must be positive");
  }
};

// Accuracy 1 - F(w)/F(w^0) >= tau  <=>  F(w) - F* <= (1 - tau) F(w^0) - F*.
inline double gap_target(const TaskSpec& task) {
  task.validate();
  const double eps = (1.0 - task.target_accuracy) * task.initial_loss - task.optimal_loss;
  require(eps > 0.0, ErrorCode::InfeasibleTarget,
          "task " + std::to_string(task.id) + ": accuracy target unreachable even at the optimum");
  return eps;
}

// Gamma <= L_d sum_i q_i Delta_i, with the q_i summing to one.
inline double gamma_bound(std::span<const double> q_weights, std::span<const double> cluster_emds, double l_div) {
  require(q_weights.size() == cluster_emds.size(), ErrorCode::DimensionMismatch, "weights and emds differ in length");
  double total = 0.0, acc = 0.0;
  for (std::size_t i = 0; i < q_weights.size(); ++i) {
    require(q_weights[i] >= 0.0, ErrorCode::DegenerateWeights, "negative weight");
    total += q_weights[i];
    acc += q_weights[i] * cluster_emds[i];
  }
  require(std::abs(total - 1.0) <= 1e-9, ErrorCode::DegenerateWeights,
          "weights sum to " + std::to_string(total) + ", expected 1");
  return l_div * acc;
}

// Gamma + sigma^2/U + (E-1)^2 G^2: the gap that never contracts.
inline double noise_floor(const ConvergenceParams& p, double gamma) {
  const double drift = static_cast<double>(p.local_steps - 1);
  return gamma + p.sigma_sq / p.participants + drift * drift * p.grad_bound * p.grad_bound;
}

inline double expected_gap(std::int64_t round, const ConvergenceParams& p, double gamma) {
  require(round >= 0, ErrorCode::InvalidParameter, "round index must be non-negative");
  return std::pow(p.contraction(), static_cast<double>(round)) * p.initial_gap + noise_floor(p, gamma);
}

// ceil( ln(Delta_0 / (eps - floor)) / (mu eta E) ), at least 1. Saturates at
// int64 max instead of overflowing when eps sits just above the floor.
inline std::int64_t rounds_required(double epsilon, const ConvergenceParams& p, double gamma) {
  const double floor = noise_floor(p, gamma);
  const double slack = epsilon - floor;
  require(slack > 0.0, ErrorCode::UnreachableAccuracy,
          "gap tolerance " + std::to_string(epsilon) + " does not exceed noise floor " + std::to_string(floor));
  const double rate = p.mu * p.eta * static_cast<double>(p.local_steps);
  const double rounds = std::ceil(std::log(p.initial_gap / slack) / rate);
  constexpr auto kMax = std::numeric_limits<std::int64_t>::max();
  if (!(rounds < static_cast<double>(kMax))) return kMax;
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(rounds));
}

// Same, with Delta_0 and the tolerance taken from the task.
inline std::int64_t rounds_required(const TaskSpec& task, ConvergenceParams p, double gamma) {
  p.initial_gap = task.initial_gap();
  return rounds_required(gap_target(task), p, gamma);
}

// Order-of-magnitude rounds bound with unit constant:
// (E G^2 + sigma^2/U + L_d L sum q Delta)/(mu eps) + (E-1)^2 G^2/(mu eps).
// Reporting only.
inline double rounds_order_bound(const ConvergenceParams& p, std::span<const double> q_weights,
                                 std::span<const double> cluster_emds, double epsilon) {
  require(epsilon > 0.0, ErrorCode::InvalidParameter, "epsilon must be positive");
  require(q_weights.size() == cluster_emds.size(), ErrorCode::DimensionMismatch, "weights and emds differ in length");
  double heterogeneity = 0.0;
  for (std::size_t i = 0; i < q_weights.size(); ++i) heterogeneity += q_weights[i] * cluster_emds[i];
  const double e = static_cast<double>(p.local_steps);
  const double g2 = p.grad_bound * p.grad_bound;
  const double denom = p.mu * epsilon;
  return (e * g2 + p.sigma_sq / p.participants + p.l_div * p.l_smooth * heterogeneity) / denom +
         (e - 1.0) * (e - 1.0) * g2 / denom;
}

struct CurvePoint {
  std::int64_t round = 0;
  double accuracy = 0.0;
};

// Analytic learning curve: accuracy_r = 1 - (F* + expected_gap(r)) / F(w^0), clamped to [0, 1].
inline std::vector<CurvePoint> learning_curve(const TaskSpec& task, ConvergenceParams p, double gamma,
                                              std::int64_t max_rounds) {
  require(max_rounds >= 1, ErrorCode::InvalidParameter, "max_rounds must be >= 1");
  task.validate();
  p.initial_gap = task.initial_gap();
  std::vector<CurvePoint> curve;
  curve.reserve(static_cast<std::size_t>(max_rounds) + 1);
  for (std::int64_t r = 0; r <= max_rounds; ++r) {
    const double acc = 1.0 - (task.optimal_loss + expected_gap(r, p, gamma)) / task.initial_loss;
    curve.push_back({r, std::clamp(acc, 0.0, 1.0)});
  }
  return curve;
}

}  // namespace codafl
