#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>

#include "error.hpp"
#include "random.hpp"

namespace codafl {

// watts = 10^(dBm / 10) / 1000
inline double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) / 1000.0; }

struct DeviceSpec {
  double cpu_freq_hz = 0.0;
  double transmit_power_w = 0.0;
  double channel_gain = 0.0;
  double dataset_bits = 0.0;

  void validate() const {
    require(cpu_freq_hz > 0.0 && transmit_power_w > 0.0 && channel_gain > 0.0 && dataset_bits > 0.0,
            ErrorCode::InvalidParameter, "device parameters must be strictly positive");
  }
};

struct ChannelModel {
  double bandwidth_hz = 0.0;
  double noise_power_w = 0.0;

  void validate() const {
    require(bandwidth_hz > 0.0 && noise_power_w > 0.0, ErrorCode::InvalidParameter,
            "channel parameters must be strictly positive");
  }
};

struct WorkloadSpec {
  double model_size_bits = 0.0;
  double cycles_per_bit = 0.0;
  int local_steps = 1;

  void validate() const {
    require(model_size_bits > 0.0 && cycles_per_bit > 0.0 && local_steps >= 1, ErrorCode::InvalidParameter,
            "workload parameters must be strictly positive");
  }
};

// Shannon rate B log2(1 + p h / sigma^2), bits per second.
inline double transmission_rate(const DeviceSpec& dev, const ChannelModel& ch) {
  const double snr = dev.transmit_power_w * dev.channel_gain / ch.noise_power_w;
  return ch.bandwidth_hz * std::log2(1.0 + snr);
}

inline double compute_time(const DeviceSpec& dev, const WorkloadSpec& wl) {
  return static_cast<double>(wl.local_steps) * dev.dataset_bits * wl.cycles_per_bit / dev.cpu_freq_hz;
}

inline double upload_time(const DeviceSpec& dev, const ChannelModel& ch, const WorkloadSpec& wl) {
  return wl.model_size_bits / transmission_rate(dev, ch);
}

// Local training for E steps plus one model upload.
inline double client_round_time(const DeviceSpec& dev, const ChannelModel& ch, const WorkloadSpec& wl) {
  return compute_time(dev, wl) + upload_time(dev, ch, wl);
}

// Per-round time of a cluster: its slowest member.
inline double straggler_round_time(std::span<const DeviceSpec> members, const ChannelModel& ch,
                                   const WorkloadSpec& wl) {
  require(!members.empty(), ErrorCode::EmptyCluster, "cluster has no members");
  double worst = 0.0;
  for (const auto& dev : members) worst = std::max(worst, client_round_time(dev, ch, wl));
  return worst;
}

// Task time with static channel gains: rounds x straggler round time.
inline double task_time(std::span<const DeviceSpec> members, const ChannelModel& ch, const WorkloadSpec& wl,
                        std::int64_t rounds) {
  require(rounds >= 1, ErrorCode::InvalidParameter, "rounds must be >= 1");
  return static_cast<double>(rounds) * straggler_round_time(members, ch, wl);
}

// Redraws channel gains every round from its own seeded stream.
class GainResampler {
 public:
  GainResampler(double mean_gain, std::uint64_t seed) : mean_gain_(mean_gain), rng_(seed) {
    require(mean_gain > 0.0, ErrorCode::InvalidParameter, "mean gain must be positive");
  }

  double operator()() { return rng_.exponential_with_mean(mean_gain_); }

 private:
  double mean_gain_;
  Rng rng_;
};

// Task time with per-round gains: sum over rounds of the per-round straggler.
inline double task_time(std::span<const DeviceSpec> members, const ChannelModel& ch, const WorkloadSpec& wl,
                        std::int64_t rounds, GainResampler& resample) {
  require(!members.empty(), ErrorCode::EmptyCluster, "cluster has no members");
  require(rounds >= 1, ErrorCode::InvalidParameter, "rounds must be >= 1");
  double total = 0.0;
  for (std::int64_t r = 0; r < rounds; ++r) {
    double worst = 0.0;
    for (auto dev : members) {
      double gain = resample();
      // Exp draws can hit exactly zero only through underflow; keep the rate positive.
      dev.channel_gain = std::max(gain, std::numeric_limits<double>::min());
      worst = std::max(worst, client_round_time(dev, ch, wl));
    }
    total += worst;
  }
  return total;
}

}  // namespace codafl
