#include <codafl/experiment.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <vector>

using namespace codafl;

namespace {

ScenarioConfig tiny_config(std::uint64_t seed = 5) {
  auto c = default_config();
  c.seed = seed;
  c.client_count = 30;
  c.cluster_count = 3;
  c.tasks = {{1, "A", 0.7, 25.0, 0.0, 0.5e6}, {2, "B", 0.8, 25.0, 0.0, 0.5e6}, {3, "C", 0.75, 25.0, 0.0, 0.5e6}};
  c.edges = {{1, 3}, {2, 3}};
  c.ppo.episodes = 200;
  return c;
}

double mean_client_emd(const std::vector<LabelHistogram>& hs) {
  std::vector<WeightedMember> all;
  for (const auto& h : hs) all.push_back({normalize(h), static_cast<double>(h.total())});
  const auto global = mixture(all);
  double total = 0.0;
  for (const auto& m : all) total += emd(m.distribution, global);
  return total / static_cast<double>(all.size());
}

}  // namespace

TEST(Names, RoundTrip) {
  for (auto c : kAllClusterers) EXPECT_EQ(parse_clusterer(to_string(c)), c);
  for (auto p : {Policy::Ppo, Policy::Greedy, Policy::Exhaustive}) EXPECT_EQ(parse_policy(to_string(p)), p);
  EXPECT_THROW(parse_clusterer("nope"), Error);
  EXPECT_THROW(parse_policy("nope"), Error);
}

TEST(DefaultConfig, FourTasksThreeLayers) {
  const auto c = default_config();
  EXPECT_EQ(c.client_count, 100u);
  ASSERT_EQ(c.tasks.size(), 4u);
  const double tau[] = {0.75, 0.90, 0.75, 0.85};
  for (std::size_t v = 0; v < 4; ++v) EXPECT_EQ(c.tasks[v].target_accuracy, tau[v]);
  EXPECT_EQ(c.effective_cluster_count(), 10u);
  const auto s = generate_scenario(c);
  EXPECT_EQ(s.clients(), 100u);
  EXPECT_EQ(s.layering.depth(), 3u);
  EXPECT_DOUBLE_EQ(s.channel.noise_power_w, dbm_to_watts(-43.0));
}

TEST(DefaultConfig, InvalidRangesAreConfigErrors) {
  auto c = default_config();
  c.samples_min = 10;
  c.samples_max = 5;
  try {
    generate_scenario(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
  }
  c = default_config();
  c.cluster_count = 101;
  EXPECT_THROW(c.validate(), Error);
  c = default_config();
  c.edges.push_back({4, 1});
  EXPECT_THROW(c.validate(), Error);
}

TEST(Scenario, SameSeedBitIdentical) {
  const auto a = generate_scenario(tiny_config(9)), b = generate_scenario(tiny_config(9));
  ASSERT_EQ(a.histograms.size(), b.histograms.size());
  for (std::size_t u = 0; u < a.clients(); ++u) {
    EXPECT_EQ(a.histograms[u].counts, b.histograms[u].counts);
    EXPECT_EQ(a.devices[u].cpu_freq_hz, b.devices[u].cpu_freq_hz);
    EXPECT_EQ(a.devices[u].channel_gain, b.devices[u].channel_gain);
  }
  const auto c = generate_scenario(tiny_config(10));
  EXPECT_NE(a.histograms[0].counts, c.histograms[0].counts);
}

TEST(Partition, CountsWithinRangeAndSumExact) {
  const auto hs = partition_data(200, 10, 0.3, 300, 900, 1);
  for (const auto& h : hs) {
    EXPECT_GE(h.total(), 300u);
    EXPECT_LE(h.total(), 900u);
    EXPECT_EQ(h.counts.size(), 10u);
  }
  EXPECT_EQ(partition_data(20, 5, 1.0, 10, 20, 3)[7].counts, partition_data(20, 5, 1.0, 10, 20, 3)[7].counts);
}

TEST(Partition, LargeAlphaApproachesIid) {
  std::vector<WeightedMember> all;
  const auto hs = partition_data(100, 10, 1e6, 300, 900, 2);
  for (const auto& h : hs) all.push_back({normalize(h), static_cast<double>(h.total())});
  const auto global = mixture(all);
  for (const auto& m : all) EXPECT_LT(emd(m.distribution, global), 0.05);
}

TEST(Partition, SmallAlphaMoreSkewed) {
  EXPECT_GT(mean_client_emd(partition_data(100, 10, 0.1, 300, 900, 4)),
            mean_client_emd(partition_data(100, 10, 1e6, 300, 900, 4)));
}

TEST(Pipeline, CodaGreedyOnDefaultsValidates) {
  const auto s = generate_scenario(default_config());
  const auto r = run_pipeline(s, Clusterer::Coda, Policy::Greedy);
  EXPECT_GT(r.makespan_s, 0.0);
  EXPECT_EQ(r.layer_times_s.size(), 3u);
  EXPECT_GE(r.layer_sum_s, r.makespan_s);
  ASSERT_EQ(r.tasks.size(), 4u);
  EXPECT_EQ(std::accumulate(r.cluster_sizes.begin(), r.cluster_sizes.end(), std::size_t{0}), 100u);
  for (const auto& t : r.tasks) {
    EXPECT_GE(t.rounds, 1);
    ASSERT_EQ(t.curve.size(), static_cast<std::size_t>(t.rounds) + 1);
    EXPECT_EQ(t.curve.front().time_s, t.start_s);
    EXPECT_NEAR(t.curve.back().time_s, t.finish_s, 1e-9 * t.finish_s);
    const auto& spec = s.config.tasks[static_cast<std::size_t>(t.task - 1)];
    EXPECT_GE(t.curve.back().accuracy, spec.target_accuracy - 1e-12);
  }
}

TEST(Pipeline, AllMethodsAndPoliciesOnTinyScenario) {
  const auto s = generate_scenario(tiny_config());
  for (auto c : kAllClusterers) {
    const auto ex = run_pipeline(s, c, Policy::Exhaustive);
    const auto gr = run_pipeline(s, c, Policy::Greedy);
    const auto pp = run_pipeline(s, c, Policy::Ppo);
    EXPECT_LE(ex.makespan_s, gr.makespan_s);
    EXPECT_LE(ex.makespan_s, pp.makespan_s);
    EXPECT_LE(pp.makespan_s, gr.makespan_s);
    // Gap to the optimum, bounded loosely on this small instance.
    EXPECT_LE(gr.makespan_s, 1.5 * ex.makespan_s);
  }
}

TEST(Pipeline, ResampledGainsChangeTimesDeterministically) {
  auto c = tiny_config();
  const auto fixed = run_pipeline(generate_scenario(c), Clusterer::Coda, Policy::Greedy);
  c.resample_gains = true;
  const auto a = run_pipeline(generate_scenario(c), Clusterer::Coda, Policy::Greedy);
  const auto b = run_pipeline(generate_scenario(c), Clusterer::Coda, Policy::Greedy);
  EXPECT_EQ(a.makespan_s, b.makespan_s);
  EXPECT_NE(a.makespan_s, fixed.makespan_s);
}

TEST(Pipeline, CodaHasLowerIntraClusterEmdThanRandom) {
  const auto s = generate_scenario(default_config());
  EXPECT_LT(run_pipeline(s, Clusterer::Coda, Policy::Greedy).mean_intra_cluster_emd,
            run_pipeline(s, Clusterer::Random, Policy::Greedy).mean_intra_cluster_emd);
}

TEST(Compare, FourMethodsBySeeds) {
  const auto cmp = compare_baselines(tiny_config(), 3, Policy::Greedy);
  ASSERT_EQ(cmp.summary.size(), 4u);
  ASSERT_EQ(cmp.runs.size(), 12u);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(cmp.summary[k].method, to_string(kAllClusterers[k]));
    EXPECT_EQ(cmp.summary[k].runs, 3u);
    for (std::size_t s = 0; s < 3; ++s) {
      EXPECT_EQ(cmp.runs[k * 3 + s].method, to_string(kAllClusterers[k]));
      EXPECT_EQ(cmp.runs[k * 3 + s].seed, 5u + s);
    }
  }
}

TEST(Compare, WorkerCountDoesNotChangeResults) {
  const auto one = compare_baselines(tiny_config(), 4, Policy::Greedy, kAllClusterers, 1);
  const auto many = compare_baselines(tiny_config(), 4, Policy::Greedy, kAllClusterers, 5);
  ASSERT_EQ(one.runs.size(), many.runs.size());
  for (std::size_t j = 0; j < one.runs.size(); ++j) {
    EXPECT_EQ(one.runs[j].makespan_s, many.runs[j].makespan_s);
    EXPECT_EQ(one.runs[j].schedule.cluster, many.runs[j].schedule.cluster);
  }
  for (std::size_t k = 0; k < one.summary.size(); ++k)
    EXPECT_EQ(one.summary[k].ci95_half_width_s, many.summary[k].ci95_half_width_s);
}

TEST(Summarize, StudentTInterval) {
  std::vector<RunResult> runs(4);
  const double ms[] = {10, 12, 14, 16};
  for (std::size_t i = 0; i < 4; ++i) runs[i].makespan_s = ms[i];
  const auto m = summarize("x", runs);
  EXPECT_DOUBLE_EQ(m.mean_makespan_s, 13.0);
  EXPECT_NEAR(m.sd_makespan_s, std::sqrt(20.0 / 3.0), 1e-12);
  // t_{0.975, 3} = 3.182446305284263
  EXPECT_NEAR(m.ci95_half_width_s, 3.182446305284263 * std::sqrt(20.0 / 3.0) / 2.0, 1e-9);
}

TEST(WorkerCount, EnvironmentCap) {
  ::setenv("CODA_SIM_THREADS", "3", 1);
  EXPECT_EQ(worker_count(), 3u);
  ::setenv("CODA_SIM_THREADS", "0", 1);
  EXPECT_GE(worker_count(), 1u);
  ::unsetenv("CODA_SIM_THREADS");
}
