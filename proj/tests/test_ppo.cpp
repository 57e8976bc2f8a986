#include <codafl/ppo.hpp>

#include "schedule_oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

using namespace codafl;

namespace {

PpoHyperparams quick(int episodes) {
  PpoHyperparams hp;
  hp.episodes = episodes;
  hp.hidden = 16;
  return hp;
}

}  // namespace

TEST(PolicyNetworkType, ActionIndexRoundTrip) {
  const PolicyNetwork net(3, 4, 8);
  EXPECT_EQ(net.actions(), 13u);
  EXPECT_EQ(net.inputs(), 3u * 4 + 4 + 12);
  for (std::size_t v = 0; v < 3; ++v)
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(net.to_action(net.to_index(Action::assign(v, i))), Action::assign(v, i));
  EXPECT_EQ(net.to_action(net.wait_index()), Action::wait());
}

TEST(PolicyNetworkType, ProbabilitiesOnlyOverValidActions) {
  const TaskGraph g({1, 2}, {{1, 2}});
  const auto m = ProcTimeMatrix::from_rows({{1.0, 2.0}, {3.0, 4.0}});
  const PolicyNetwork net(2, 2, 8);
  Rng rng(1);
  const auto params = net.initial_params(rng);
  const auto s = env_reset(g, m);
  const auto valid = net.mask(s, m);
  EXPECT_EQ(valid, (std::vector<std::size_t>{0, 1}));
  const auto f = net.forward(params, net.encode(s, m, 4.0), valid);
  ASSERT_EQ(f.probs.size(), 2u);
  EXPECT_NEAR(f.probs[0] + f.probs[1], 1.0, 1e-12);
}

TEST(PolicyNetworkType, BackwardMatchesFiniteDifferences) {
  const TaskGraph g({1, 2, 3}, {{1, 3}});
  const auto m = ProcTimeMatrix::from_rows({{1.0, 2.0}, {3.0, 4.0}, {2.0, 1.5}});
  const PolicyNetwork net(3, 2, 5);
  Rng rng(2);
  auto params = net.initial_params(rng);
  // Larger output weights so the softmax is not flat.
  for (auto& w : params.values) w += 0.1 * rng.normal();
  const auto s = env_reset(g, m);
  const auto x = net.encode(s, m, 4.0);
  const auto valid = net.mask(s, m);
  const std::size_t chosen = 1;
  const double target = 0.3;

  // loss = -log p[chosen] + (V - target)^2
  auto loss = [&](const PolicyParams& p) {
    const auto f = net.forward(p, x, valid);
    return -std::log(f.probs[chosen]) + (f.value - target) * (f.value - target);
  };
  const auto f = net.forward(params, x, valid);
  std::vector<double> dlogits(valid.size());
  for (std::size_t k = 0; k < valid.size(); ++k) dlogits[k] = f.probs[k] - (k == chosen ? 1.0 : 0.0);
  std::vector<double> grad(net.parameter_count(), 0.0);
  net.backward(params, x, valid, f, dlogits, 2.0 * (f.value - target), grad);

  double worst = 0.0;
  for (std::size_t k = 0; k < params.values.size(); ++k) {
    auto plus = params, minus = params;
    plus.values[k] += 1e-6;
    minus.values[k] -= 1e-6;
    const double numeric = (loss(plus) - loss(minus)) / 2e-6;
    worst = std::max(worst, std::abs(numeric - grad[k]));
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(Adam, MinimizesQuadratic) {
  AdamOptimizer adam(2, 0.05);
  std::vector<double> x{3.0, -2.0};
  for (int i = 0; i < 2000; ++i) adam.step(x, {2.0 * (x[0] - 1.0), 2.0 * (x[1] + 0.5)});
  EXPECT_NEAR(x[0], 1.0, 1e-3);
  EXPECT_NEAR(x[1], -0.5, 1e-3);
}

TEST(PpoTrain, SingleTaskSingleCluster) {
  const TaskGraph g({1}, {});
  const auto m = ProcTimeMatrix::from_rows({{2.0}});
  const auto r = ppo_train(g, m, quick(20), 1);
  EXPECT_EQ(r.best.makespan, 2.0);
  for (double ms : r.episode_makespans) EXPECT_EQ(ms, 2.0);
}

TEST(PpoTrain, TwoByTwoReachesOptimum) {
  const TaskGraph g({1, 2}, {});
  const auto m = ProcTimeMatrix::from_rows({{3, 5}, {4, 2}});
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto r = ppo_train(g, m, quick(200), seed);
    EXPECT_EQ(r.best.makespan, 3.0);
  }
}

TEST(PpoTrain, EpisodeBudgetAndGreedyWarmStart) {
  const TaskGraph g({1, 2, 3, 4}, {{1, 2}, {1, 3}, {2, 4}, {3, 4}});
  const auto m = ProcTimeMatrix::from_rows({{4, 6, 5}, {3, 5, 2}, {6, 4, 3}, {5, 3, 4}});
  const auto r = ppo_train(g, m, quick(57), 9);
  EXPECT_EQ(r.episode_makespans.size(), 57u);
  EXPECT_EQ(r.episode_makespans.front(), greedy_schedule(g, m).makespan);
  EXPECT_LE(r.best.makespan, *std::min_element(r.episode_makespans.begin(), r.episode_makespans.end()));
  validate_schedule(r.best, g, m);
}

TEST(PpoTrain, FindsFourTaskOptimumBelowGreedy) {
  // Greedy gives 11 here; the optimum is 10.
  const TaskGraph g({1, 2, 3, 4}, {{1, 2}, {1, 3}, {2, 4}, {3, 4}});
  const auto m = ProcTimeMatrix::from_rows({{4, 6, 5}, {3, 5, 2}, {6, 4, 3}, {5, 3, 4}});
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) hits += ppo_train(g, m, quick(300), seed).best.makespan == 10.0;
  EXPECT_GE(hits, 4);
}

TEST(PpoTrain, DeterministicPerSeed) {
  const TaskGraph g({1, 2, 3}, {{1, 3}});
  const auto m = ProcTimeMatrix::from_rows({{1.0, 2.0}, {3.0, 4.0}, {2.0, 1.5}});
  const auto a = ppo_train(g, m, quick(60), 4), b = ppo_train(g, m, quick(60), 4);
  EXPECT_EQ(a.params.values, b.params.values);
  EXPECT_EQ(a.episode_makespans, b.episode_makespans);
  EXPECT_EQ(a.best.cluster, b.best.cluster);
  const auto c = ppo_train(g, m, quick(60), 5);
  EXPECT_NE(a.params.values, c.params.values);
}

TEST(PpoTrain, NeverWorseThanGreedyOrBelowOptimum) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t v = 2 + rng.below(3), n = 1 + rng.below(3);
    std::vector<int> ids(v);
    std::iota(ids.begin(), ids.end(), 1);
    std::vector<Edge> edges;
    for (std::size_t a = 0; a < v; ++a)
      for (std::size_t b = a + 1; b < v; ++b)
        if (rng.uniform01() < 0.4) edges.push_back({ids[a], ids[b]});
    ProcTimeMatrix m(v, n);
    for (std::size_t t = 0; t < v; ++t)
      for (std::size_t c = 0; c < n; ++c) m.set(t, c, rng.uniform(1.0, 10.0));
    const TaskGraph g(ids, edges);
    const auto r = ppo_train(g, m, quick(80), static_cast<std::uint64_t>(trial));
    validate_schedule(r.best, g, m);
    EXPECT_LE(r.best.makespan, greedy_schedule(g, m).makespan);
    EXPECT_GE(r.best.makespan, oracle::brute_force_makespan(g, m));
  }
}

TEST(PpoTrain, InvalidHyperparams) {
  const TaskGraph g({1}, {});
  const auto m = ProcTimeMatrix::from_rows({{2.0}});
  auto hp = quick(10);
  hp.clip = 0.0;
  EXPECT_THROW(ppo_train(g, m, hp, 0), Error);
}
