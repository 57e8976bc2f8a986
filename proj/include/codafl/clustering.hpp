#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "heterogeneity.hpp"
#include "random.hpp"

namespace codafl {

// Disjoint, covering partition of clients 0..U-1 into N nonempty clusters.
class ClusterAssignment {
 public:
  ClusterAssignment() = default;

  ClusterAssignment(std::vector<std::size_t> labels, std::size_t n_clusters)
      : labels_(std::move(labels)), n_clusters_(n_clusters) {
    require(n_clusters_ >= 1, ErrorCode::InvalidAssignment, "need at least one cluster");
    std::vector<std::size_t> sizes(n_clusters_, 0);
    for (auto l : labels_) {
      require(l < n_clusters_, ErrorCode::InvalidAssignment, "cluster label out of range");
      ++sizes[l];
    }
    for (std::size_t i = 0; i < n_clusters_; ++i)
      require(sizes[i] > 0, ErrorCode::InvalidAssignment, "cluster " + std::to_string(i) + " is empty");
  }

  std::size_t clients() const noexcept { return labels_.size(); }
  std::size_t n_clusters() const noexcept { return n_clusters_; }
  std::span<const std::size_t> labels() const noexcept { return labels_; }
  std::size_t label(std::size_t client) const { return labels_.at(client); }

  std::vector<std::size_t> members(std::size_t cluster) const {
    std::vector<std::size_t> out;
    for (std::size_t u = 0; u < labels_.size(); ++u)
      if (labels_[u] == cluster) out.push_back(u);
    return out;
  }

  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> s(n_clusters_, 0);
    for (auto l : labels_) ++s[l];
    return s;
  }

  friend bool operator==(const ClusterAssignment&, const ClusterAssignment&) = default;

 private:
  std::vector<std::size_t> labels_;
  std::size_t n_clusters_ = 0;
};

namespace detail {

inline void check_cluster_count(std::size_t clients, std::size_t n) {
  require(n >= 1 && n <= clients, ErrorCode::InvalidClusterCount,
          "cluster count " + std::to_string(n) + " not in [1, " + std::to_string(clients) + "]");
}

// Relabel so clusters are numbered in order of their lowest client index.
inline ClusterAssignment canonical(const std::vector<std::size_t>& raw, std::size_t n) {
  std::vector<std::size_t> remap(std::max<std::size_t>(n, *std::max_element(raw.begin(), raw.end()) + 1),
                                 std::numeric_limits<std::size_t>::max());
  std::vector<std::size_t> labels(raw.size());
  std::size_t next = 0;
  for (std::size_t u = 0; u < raw.size(); ++u) {
    if (remap[raw[u]] == std::numeric_limits<std::size_t>::max()) remap[raw[u]] = next++;
    labels[u] = remap[raw[u]];
  }
  return ClusterAssignment(std::move(labels), n);
}

inline double squared_euclidean(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

}  // namespace detail

// Agglomerative hierarchical clustering with average linkage.
//
// Linkage between clusters A and B is the mean of D over all cross pairs.
// Cross-pair sums are carried exactly (no Lance-Williams averaging), so the
// merge order only depends on the sums. Ties go to the lexicographically
// smallest (i, j) slot pair; a merged cluster keeps the lower slot.
// O(U^3) time, O(U^2) memory.
inline ClusterAssignment agglomerative_cluster(const DistanceMatrix& d, std::size_t n_clusters) {
  const std::size_t u = d.size();
  detail::check_cluster_count(u, n_clusters);
  for (std::size_t i = 0; i < u; ++i) {
    require(d(i, i) == 0.0, ErrorCode::InvalidDistanceMatrix, "nonzero diagonal");
    for (std::size_t j = i + 1; j < u; ++j) {
      const double a = d(i, j), b = d(j, i);
      require(std::isfinite(a) && a >= 0.0, ErrorCode::InvalidDistanceMatrix, "negative or non-finite distance");
      require(std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}),
              ErrorCode::InvalidDistanceMatrix, "distance matrix is not symmetric");
    }
  }

  DistanceMatrix sums = d;
  std::vector<std::size_t> size(u, 1);
  std::vector<bool> active(u, true);
  std::vector<std::size_t> slot(u);
  std::iota(slot.begin(), slot.end(), 0);

  for (std::size_t remaining = u; remaining > n_clusters; --remaining) {
    std::size_t best_i = 0, best_j = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < u; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < u; ++j) {
        if (!active[j]) continue;
        const double link = sums(i, j) / static_cast<double>(size[i] * size[j]);
        if (link < best) {
          best = link;
          best_i = i;
          best_j = j;
        }
      }
    }
    for (std::size_t k = 0; k < u; ++k) {
      if (!active[k] || k == best_i || k == best_j) continue;
      sums(best_i, k) = sums(k, best_i) = sums(best_i, k) + sums(best_j, k);
    }
    size[best_i] += size[best_j];
    active[best_j] = false;
    for (auto& s : slot)
      if (s == best_j) s = best_i;
  }
  return detail::canonical(slot, n_clusters);
}

// Stable sort by score, then deal into N groups round-robin.
inline ClusterAssignment deal_round_robin(std::span<const double> scores, std::size_t n_clusters) {
  detail::check_cluster_count(scores.size(), n_clusters);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<std::size_t> labels(scores.size());
  for (std::size_t rank = 0; rank < order.size(); ++rank) labels[order[rank]] = rank % n_clusters;
  return ClusterAssignment(std::move(labels), n_clusters);
}

// EMD-balanced baseline: equal-size groups that each span the range of
// client-to-global EMD. `weights` (data sizes) define the global mixture;
// empty means equal weights.
inline ClusterAssignment emd_balanced_cluster(std::span<const LabelDistribution> dists, std::size_t n_clusters,
                                              std::span<const double> weights = {}) {
  detail::check_cluster_count(dists.size(), n_clusters);
  require(weights.empty() || weights.size() == dists.size(), ErrorCode::DimensionMismatch,
          "weights must match distributions");
  std::vector<WeightedMember> members;
  members.reserve(dists.size());
  for (std::size_t i = 0; i < dists.size(); ++i)
    members.push_back({dists[i], weights.empty() ? 1.0 : weights[i]});
  const auto global = mixture(members);
  std::vector<double> scores(dists.size());
  for (std::size_t i = 0; i < dists.size(); ++i) scores[i] = emd(dists[i], global);
  return deal_round_robin(scores, n_clusters);
}

struct KMeansResult {
  ClusterAssignment assignment;
  double objective = 0.0;  // sum of squared distances to assigned centroid
  int iterations = 0;
};

// Lloyd's k-means on probability vectors (squared Euclidean) with k-means++
// seeding. Empty clusters are repaired by moving the point farthest from its
// centroid out of the largest cluster.
inline KMeansResult kmeans_cluster_detailed(std::span<const LabelDistribution> dists, std::size_t n_clusters,
                                            std::uint64_t seed, int max_iterations = 100) {
  const std::size_t u = dists.size();
  detail::check_cluster_count(u, n_clusters);
  const std::size_t dims = dists.front().classes();
  for (const auto& d : dists)
    require(d.classes() == dims, ErrorCode::DimensionMismatch, "distributions have different class counts");

  Rng rng(seed);
  std::vector<std::vector<double>> centroids;
  std::vector<bool> chosen(u, false);
  auto pick = [&](std::size_t idx) {
    chosen[idx] = true;
    centroids.emplace_back(dists[idx].probs().begin(), dists[idx].probs().end());
  };
  pick(static_cast<std::size_t>(rng.below(u)));
  std::vector<double> nearest(u, std::numeric_limits<double>::infinity());
  while (centroids.size() < n_clusters) {
    for (std::size_t p = 0; p < u; ++p)
      nearest[p] = std::min(nearest[p], detail::squared_euclidean(dists[p].probs(), centroids.back()));
    std::vector<double> weights(u);
    for (std::size_t p = 0; p < u; ++p) weights[p] = chosen[p] ? 0.0 : nearest[p];
    double total = 0.0;
    for (double w : weights) total += w;
    if (total > 0.0) {
      pick(rng.categorical(weights));
    } else {
      // Every remaining point coincides with a centroid: pick uniformly among unchosen.
      std::vector<std::size_t> pool;
      for (std::size_t p = 0; p < u; ++p)
        if (!chosen[p]) pool.push_back(p);
      pick(pool[static_cast<std::size_t>(rng.below(pool.size()))]);
    }
  }

  std::vector<std::size_t> labels(u, 0);
  auto distance_to = [&](std::size_t p, std::size_t c) {
    return detail::squared_euclidean(dists[p].probs(), centroids[c]);
  };
  auto assign = [&] {
    for (std::size_t p = 0; p < u; ++p) {
      std::size_t best = 0;
      double best_d = distance_to(p, 0);
      for (std::size_t c = 1; c < n_clusters; ++c) {
        const double dc = distance_to(p, c);
        if (dc < best_d) {
          best_d = dc;
          best = c;
        }
      }
      labels[p] = best;
    }
  };
  auto repair = [&] {
    for (;;) {
      std::vector<std::size_t> sizes(n_clusters, 0);
      for (auto l : labels) ++sizes[l];
      const auto empty = std::find(sizes.begin(), sizes.end(), 0u);
      if (empty == sizes.end()) return;
      const auto largest = static_cast<std::size_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
      std::size_t far = u;
      double far_d = -1.0;
      for (std::size_t p = 0; p < u; ++p) {
        if (labels[p] != largest) continue;
        const double dp = distance_to(p, largest);
        if (dp > far_d) {
          far_d = dp;
          far = p;
        }
      }
      const auto target = static_cast<std::size_t>(empty - sizes.begin());
      labels[far] = target;
      centroids[target].assign(dists[far].probs().begin(), dists[far].probs().end());
    }
  };

  int iteration = 0;
  std::vector<std::size_t> previous;
  for (; iteration < max_iterations; ++iteration) {
    assign();
    repair();
    if (labels == previous) break;
    previous = labels;
    for (auto& c : centroids) std::fill(c.begin(), c.end(), 0.0);
    std::vector<std::size_t> counts(n_clusters, 0);
    for (std::size_t p = 0; p < u; ++p) {
      ++counts[labels[p]];
      for (std::size_t k = 0; k < dims; ++k) centroids[labels[p]][k] += dists[p][k];
    }
    for (std::size_t c = 0; c < n_clusters; ++c)
      for (auto& x : centroids[c]) x /= static_cast<double>(counts[c]);
  }

  KMeansResult result;
  result.iterations = iteration;
  // Objective against the centroids of the final labels.
  std::vector<std::vector<double>> means(n_clusters, std::vector<double>(dims, 0.0));
  std::vector<std::size_t> counts(n_clusters, 0);
  for (std::size_t p = 0; p < u; ++p) {
    ++counts[labels[p]];
    for (std::size_t k = 0; k < dims; ++k) means[labels[p]][k] += dists[p][k];
  }
  for (std::size_t c = 0; c < n_clusters; ++c)
    for (auto& x : means[c]) x /= static_cast<double>(counts[c]);
  for (std::size_t p = 0; p < u; ++p) result.objective += detail::squared_euclidean(dists[p].probs(), means[labels[p]]);
  result.assignment = detail::canonical(labels, n_clusters);
  return result;
}

inline ClusterAssignment kmeans_cluster(std::span<const LabelDistribution> dists, std::size_t n_clusters,
                                        std::uint64_t seed) {
  return kmeans_cluster_detailed(dists, n_clusters, seed).assignment;
}

// Seeded shuffle chunked into N groups whose sizes differ by at most one.
inline ClusterAssignment random_cluster(std::size_t clients, std::size_t n_clusters, std::uint64_t seed) {
  detail::check_cluster_count(clients, n_clusters);
  std::vector<std::size_t> order(clients);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<std::size_t> labels(clients);
  const std::size_t base = clients / n_clusters, extra = clients % n_clusters;
  std::size_t pos = 0;
  for (std::size_t c = 0; c < n_clusters; ++c) {
    const std::size_t count = base + (c < extra ? 1 : 0);
    for (std::size_t k = 0; k < count; ++k) labels[order[pos++]] = c;
  }
  return ClusterAssignment(std::move(labels), n_clusters);
}

// Mean of D over all unordered within-cluster pairs (pooled across clusters).
// Zero when every cluster is a singleton.
inline double mean_intra_cluster_distance(const DistanceMatrix& d, const ClusterAssignment& a) {
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = i + 1; j < d.size(); ++j)
      if (a.label(i) == a.label(j)) {
        sum += d(i, j);
        ++pairs;
      }
  return pairs == 0 ? 0.0 : sum / static_cast<double>(pairs);
}

}  // namespace codafl
