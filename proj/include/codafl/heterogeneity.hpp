#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace codafl {

// Raw per-class sample counts of one client.
struct LabelHistogram {
  std::vector<std::uint64_t> counts;

  std::size_t classes() const noexcept { return counts.size(); }
  std::uint64_t total() const noexcept {
    std::uint64_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }
};

inline constexpr double kDistributionTolerance = 1e-9;

// Per-class probability vector: entries in [0, 1] summing to 1 (within 1e-9).
class LabelDistribution {
 public:
  LabelDistribution() = default;

  explicit LabelDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
    require(!probs_.empty(), ErrorCode::InvalidDistribution, "distribution needs at least one class");
    double sum = 0.0;
    for (double p : probs_) {
      require(std::isfinite(p) && p >= 0.0 && p <= 1.0, ErrorCode::InvalidDistribution,
              "probability outside [0, 1]");
      sum += p;
    }
    require(std::abs(sum - 1.0) <= kDistributionTolerance, ErrorCode::InvalidDistribution,
            "probabilities sum to " + std::to_string(sum));
  }

  static LabelDistribution uniform(std::size_t classes) {
    return LabelDistribution(std::vector<double>(classes, 1.0 / static_cast<double>(classes)));
  }

  std::size_t classes() const noexcept { return probs_.size(); }
  std::span<const double> probs() const noexcept { return probs_; }
  double operator[](std::size_t k) const { return probs_[k]; }

  friend bool operator==(const LabelDistribution&, const LabelDistribution&) = default;

 private:
  std::vector<double> probs_;
};

struct WeightedMember {
  LabelDistribution distribution;
  double weight = 1.0;
};

// Divide by the total, then renormalize once more so the result sums to 1
// as closely as floating point allows.
inline LabelDistribution normalize(const LabelHistogram& h) {
  require(!h.counts.empty(), ErrorCode::DegenerateHistogram, "histogram has no classes");
  const auto total = h.total();
  require(total > 0, ErrorCode::DegenerateHistogram, "all-zero histogram");
  std::vector<double> probs(h.counts.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    probs[k] = static_cast<double>(h.counts[k]) / static_cast<double>(total);
    sum += probs[k];
  }
  for (auto& p : probs) p = std::min(1.0, p / sum);
  return LabelDistribution(std::move(probs));
}

// L1 distance between label marginals: sum_y |p_y - q_y|, in [0, 2].
inline double emd(const LabelDistribution& p, const LabelDistribution& q) {
  require(p.classes() == q.classes(), ErrorCode::DimensionMismatch,
          "class counts differ: " + std::to_string(p.classes()) + " vs " + std::to_string(q.classes()));
  double d = 0.0;
  for (std::size_t k = 0; k < p.classes(); ++k) d += std::abs(p[k] - q[k]);
  return d;
}

// Dense symmetric matrix, row-major.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}
  DistanceMatrix(std::size_t n, std::vector<double> data) : n_(n), data_(std::move(data)) {
    require(data_.size() == n_ * n_, ErrorCode::DimensionMismatch, "distance matrix must be n x n");
  }

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

inline DistanceMatrix pairwise_distance_matrix(std::span<const LabelDistribution> dists) {
  require(!dists.empty(), ErrorCode::DimensionMismatch, "need at least one distribution");
  const auto classes = dists.front().classes();
  for (const auto& d : dists)
    require(d.classes() == classes, ErrorCode::DimensionMismatch, "distributions have different class counts");
  DistanceMatrix m(dists.size());
  for (std::size_t i = 0; i < dists.size(); ++i)
    for (std::size_t j = i + 1; j < dists.size(); ++j) m(i, j) = m(j, i) = emd(dists[i], dists[j]);
  return m;
}

// Weighted mixture sum_m w_m p_m / sum_m w_m. Houses both a cluster's
// aggregate distribution and any data-weighted global reference.
inline LabelDistribution mixture(std::span<const WeightedMember> members) {
  require(!members.empty(), ErrorCode::DegenerateWeights, "mixture of no members");
  const auto classes = members.front().distribution.classes();
  double total = 0.0;
  for (const auto& m : members) {
    require(m.distribution.classes() == classes, ErrorCode::DimensionMismatch, "mixture members differ in class count");
    require(std::isfinite(m.weight) && m.weight >= 0.0, ErrorCode::DegenerateWeights, "negative or non-finite weight");
    total += m.weight;
  }
  require(total > 0.0, ErrorCode::DegenerateWeights, "zero total weight");
  std::vector<double> probs(classes, 0.0);
  for (const auto& m : members)
    for (std::size_t k = 0; k < classes; ++k) probs[k] += m.weight * m.distribution[k];
  double sum = 0.0;
  for (auto& p : probs) {
    p /= total;
    sum += p;
  }
  for (auto& p : probs) p = std::min(1.0, p / sum);
  return LabelDistribution(std::move(probs));
}

// Cluster-level heterogeneity: the distance of the cluster's mixture from a
// reference distribution (scenario-global, or the cluster's own task mixture).
inline double cluster_emd(const LabelDistribution& cluster_dist, const LabelDistribution& global_dist) {
  return emd(cluster_dist, global_dist);
}

// sum_i w_i d_i / sum_i w_i. Weights are normalized internally, so cluster data
// shares, per-round shares, and q coefficients all go through here unchanged.
inline double weighted_average_emd(std::span<const double> emds, std::span<const double> weights) {
  require(emds.size() == weights.size(), ErrorCode::DimensionMismatch, "emds and weights differ in length");
  double total = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < emds.size(); ++i) {
    require(std::isfinite(weights[i]) && weights[i] >= 0.0, ErrorCode::DegenerateWeights, "negative weight");
    total += weights[i];
    acc += weights[i] * emds[i];
  }
  require(total > 0.0, ErrorCode::DegenerateWeights, "zero total weight");
  return acc / total;
}

}  // namespace codafl
