#pragma once

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

namespace codafl {

// splitmix64 finalizer; used to derive independent stream seeds from one scenario seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix_seed(mix_seed(seed) ^ mix_seed(stream + 0x51ed270b27a1f3c5ULL));
}

// Seeded random stream with platform-independent distributions.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the
// standard. The distributions in <random> are not, so every draw below is
// computed from raw engine output to keep scenarios bit-identical across
// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe to take the log of.
  double uniform_open01() { return 1.0 - uniform01(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, bound) by rejection (no modulo bias).
  std::uint64_t below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % bound;
  }

  // Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  double exponential_with_mean(double mean) { return -mean * std::log(uniform_open01()); }

  // Marsaglia polar method; the spare value is discarded so each call
  // consumes a deterministic amount of the stream per accepted pair.
  double normal() {
    for (;;) {
      const double u = 2.0 * uniform01() - 1.0;
      const double v = 2.0 * uniform01() - 1.0;
      const double s = u * u + v * v;
      if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }

  // log of a Gamma(shape, 1) draw. Working in log space keeps tiny shapes
  // (heavily skewed Dirichlet partitions) from underflowing to zero.
  double log_gamma_variate(double shape) {
    if (shape < 1.0) {
      const double boosted = log_gamma_variate(shape + 1.0);
      return boosted + std::log(uniform_open01()) / shape;
    }
    // Marsaglia & Tsang.
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = 0.0;
      double v = 0.0;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_open01();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return std::log(d * v);
    }
  }

  // Symmetric Dirichlet(alpha) over `dims` categories.
  std::vector<double> dirichlet(std::size_t dims, double alpha) {
    std::vector<double> logs(dims);
    for (auto& l : logs) l = log_gamma_variate(alpha);
    double peak = logs.empty() ? 0.0 : logs[0];
    for (double l : logs) peak = std::max(peak, l);
    std::vector<double> out(dims);
    double total = 0.0;
    for (std::size_t k = 0; k < dims; ++k) {
      out[k] = std::exp(logs[k] - peak);
      total += out[k];
    }
    for (auto& x : out) x /= total;
    return out;
  }

  // Index drawn with probability proportional to weights; uniform if all are zero.
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) return static_cast<std::size_t>(below(weights.size()));
    const double target = uniform01() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (target < acc && weights[i] > 0.0) return i;
    }
    for (std::size_t i = weights.size(); i-- > 0;)
      if (weights[i] > 0.0) return i;
    return 0;
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace codafl
