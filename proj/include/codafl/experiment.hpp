#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "clustering.hpp"
#include "convergence.hpp"
#include "dag.hpp"
#include "error.hpp"
#include "heterogeneity.hpp"
#include "latency.hpp"
#include "ppo.hpp"
#include "random.hpp"
#include "scheduler.hpp"

namespace codafl {

enum class Clusterer { Coda, EmdBalanced, KMeans, Random };
enum class Policy { Ppo, Greedy, Exhaustive };

inline std::string to_string(Clusterer c) {
  switch (c) {
    case Clusterer::Coda: return "coda";
    case Clusterer::EmdBalanced: return "eb";
    case Clusterer::KMeans: return "kc";
    case Clusterer::Random: return "rc";
  }
  return "?";
}

inline std::string to_string(Policy p) {
  switch (p) {
    case Policy::Ppo: return "ppo";
    case Policy::Greedy: return "greedy";
    case Policy::Exhaustive: return "exhaustive";
  }
  return "?";
}

inline Clusterer parse_clusterer(const std::string& s) {
  if (s == "coda") return Clusterer::Coda;
  if (s == "eb") return Clusterer::EmdBalanced;
  if (s == "kc") return Clusterer::KMeans;
  if (s == "rc") return Clusterer::Random;
  fail(ErrorCode::ConfigError, "unknown clusterer '" + s + "' (expected coda, eb, kc or rc)");
}

inline Policy parse_policy(const std::string& s) {
  if (s == "ppo") return Policy::Ppo;
  if (s == "greedy") return Policy::Greedy;
  if (s == "exhaustive") return Policy::Exhaustive;
  fail(ErrorCode::ConfigError, "unknown policy '" + s + "' (expected ppo, greedy or exhaustive)");
}

inline constexpr Clusterer kAllClusterers[] = {Clusterer::Coda, Clusterer::EmdBalanced, Clusterer::KMeans,
                                               Clusterer::Random};

// Every knob of a simulated deployment. Defaults reproduce the four-task,
// three-layer MNIST-family setup with 100 clients.
struct ScenarioConfig {
  std::uint64_t seed = 1;
  std::size_t client_count = 100;
  std::size_t cluster_count = 0;  // 0: max(V, ceil(U / 10))
  std::size_t class_count = 10;
  double dirichlet_alpha = 0.3;
  std::int64_t samples_min = 300;
  std::int64_t samples_max = 900;
  double bits_per_sample = 6272.0;  // one 28x28 byte image
  double cpu_min_hz = 1.2e9;
  double cpu_max_hz = 2.5e9;
  double gain_mean = 2.5e-7;
  double transmit_power_w = 0.2;
  double noise_dbm = -43.0;
  double bandwidth_hz = 20e6;
  double cycles_per_bit = 100.0;
  bool resample_gains = false;
  ConvergenceParams convergence{};
  std::vector<TaskSpec> tasks;
  std::vector<Edge> edges;
  std::size_t exhaustive_limit = 8;
  PpoHyperparams ppo{};

  std::size_t effective_cluster_count() const {
    if (cluster_count != 0) return cluster_count;
    return std::max(tasks.size(), (client_count + 9) / 10);
  }

  void validate() const {
    auto check = [](bool ok, const std::string& what) {
      if (!ok) fail(ErrorCode::ConfigError, what);
    };
    check(client_count >= 1, "client_count must be >= 1");
    check(class_count >= 1, "class_count must be >= 1");
    check(effective_cluster_count() >= 1 && effective_cluster_count() <= client_count,
          "cluster_count must be in [1, client_count]");
    check(dirichlet_alpha > 0.0 && std::isfinite(dirichlet_alpha), "dirichlet_alpha must be positive");
    check(samples_min >= 1 && samples_max >= samples_min, "need 1 <= samples_min <= samples_max");
    check(bits_per_sample > 0.0, "bits_per_sample must be positive");
    check(cpu_min_hz > 0.0 && cpu_max_hz >= cpu_min_hz, "need 0 < cpu_min_hz <= cpu_max_hz");
    check(gain_mean > 0.0 && transmit_power_w > 0.0 && bandwidth_hz > 0.0 && cycles_per_bit > 0.0,
          "channel and compute parameters must be positive");
    check(std::isfinite(noise_dbm), "noise_dbm must be finite");
    check(exhaustive_limit >= 1, "exhaustive_limit must be >= 1");
    try {
      auto c = convergence;
      c.participants = static_cast<double>(client_count);
      c.validate();
      for (const auto& t : tasks) t.validate();
      ppo.validate();
      const TaskGraph g = graph();
      validate_and_layer(g);
    } catch (const Error& e) {
      fail(ErrorCode::ConfigError, e.what());
    }
  }

  TaskGraph graph() const {
    std::vector<int> ids;
    for (const auto& t : tasks) ids.push_back(t.id);
    return TaskGraph(std::move(ids), edges);
  }
};

inline ScenarioConfig default_config() {
  ScenarioConfig c;
  // Losses are in arbitrary units; F0 = 25 keeps every target reachable
  // even for a maximally heterogeneous cluster (Gamma <= 2 L_d).
  c.tasks = {
      {1, "KMNIST", 0.75, 25.0, 0.0, 0.5e6},
      {2, "MNIST", 0.90, 25.0, 0.0, 0.5e6},
      {3, "FashionMNIST", 0.75, 25.0, 0.0, 0.5e6},
      {4, "QMNIST", 0.85, 25.0, 0.0, 0.5e6},
  };
  c.edges = {{1, 2}, {1, 3}, {2, 4}, {3, 4}};
  return c;
}

struct Scenario {
  ScenarioConfig config;
  std::vector<LabelHistogram> histograms;
  std::vector<DeviceSpec> devices;
  ChannelModel channel;
  TaskGraph graph;
  Layering layering;

  std::size_t clients() const noexcept { return histograms.size(); }

  ConvergenceParams convergence() const {
    auto c = config.convergence;
    c.participants = static_cast<double>(config.client_count);
    return c;
  }
};

// Per-client label counts: proportions from a symmetric Dirichlet(alpha),
// sample count uniform in the range, rounded by largest remainder so the
// counts sum exactly to the sample count.
inline std::vector<LabelHistogram> partition_data(std::size_t clients, std::size_t classes, double alpha,
                                                  std::int64_t samples_min, std::int64_t samples_max,
                                                  std::uint64_t seed) {
  if (!(alpha > 0.0) || classes == 0 || samples_min < 1 || samples_max < samples_min)
    fail(ErrorCode::ConfigError, "invalid partition parameters");
  Rng rng(seed);
  std::vector<LabelHistogram> out(clients);
  for (auto& h : out) {
    const auto n = rng.uniform_int(samples_min, samples_max);
    const auto props = rng.dirichlet(classes, alpha);
    h.counts.assign(classes, 0);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::int64_t assigned = 0;
    for (std::size_t k = 0; k < classes; ++k) {
      const double exact = props[k] * static_cast<double>(n);
      const auto whole = static_cast<std::int64_t>(std::floor(exact));
      h.counts[k] = static_cast<std::uint64_t>(whole);
      assigned += whole;
      remainders.emplace_back(exact - static_cast<double>(whole), k);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < n; ++r, ++assigned) ++h.counts[remainders[r % classes].second];
  }
  return out;
}

inline Scenario generate_scenario(const ScenarioConfig& config) {
  config.validate();
  Scenario s;
  s.config = config;
  s.histograms = partition_data(config.client_count, config.class_count, config.dirichlet_alpha, config.samples_min,
                                config.samples_max, derive_seed(config.seed, 1));
  Rng rng(derive_seed(config.seed, 2));
  s.devices.resize(config.client_count);
  for (std::size_t u = 0; u < config.client_count; ++u) {
    auto& d = s.devices[u];
    d.cpu_freq_hz = rng.uniform(config.cpu_min_hz, config.cpu_max_hz);
    d.channel_gain = std::max(rng.exponential_with_mean(config.gain_mean), std::numeric_limits<double>::min());
    d.transmit_power_w = config.transmit_power_w;
    d.dataset_bits = static_cast<double>(s.histograms[u].total()) * config.bits_per_sample;
  }
  s.channel = {config.bandwidth_hz, dbm_to_watts(config.noise_dbm)};
  s.graph = config.graph();
  s.layering = validate_and_layer(s.graph);
  return s;
}

inline std::vector<LabelDistribution> client_distributions(const Scenario& s) {
  std::vector<LabelDistribution> out;
  out.reserve(s.histograms.size());
  for (const auto& h : s.histograms) out.push_back(normalize(h));
  return out;
}

inline std::vector<double> client_sample_counts(const Scenario& s) {
  std::vector<double> out;
  for (const auto& h : s.histograms) out.push_back(static_cast<double>(h.total()));
  return out;
}

inline ClusterAssignment cluster_clients(const Scenario& s, Clusterer method) {
  const auto dists = client_distributions(s);
  const auto n = s.config.effective_cluster_count();
  switch (method) {
    case Clusterer::Coda: return agglomerative_cluster(pairwise_distance_matrix(dists), n);
    case Clusterer::EmdBalanced: return emd_balanced_cluster(dists, n, client_sample_counts(s));
    case Clusterer::KMeans: return kmeans_cluster(dists, n, derive_seed(s.config.seed, 3));
    case Clusterer::Random: return random_cluster(s.clients(), n, derive_seed(s.config.seed, 4));
  }
  fail(ErrorCode::ConfigError, "unknown clusterer");
}

inline std::vector<ClusterProfile> cluster_profiles(const Scenario& s, const ClusterAssignment& a) {
  const auto dists = client_distributions(s);
  const auto sizes = client_sample_counts(s);
  std::vector<ClusterProfile> out(a.n_clusters());
  for (std::size_t i = 0; i < a.n_clusters(); ++i) {
    std::vector<LabelDistribution> md;
    std::vector<double> ms;
    for (auto u : a.members(i)) {
      out[i].devices.push_back(s.devices[u]);
      md.push_back(dists[u]);
      ms.push_back(sizes[u]);
    }
    out[i].gamma = intra_cluster_gamma(md, ms, s.config.convergence.l_div);
  }
  return out;
}

inline ProcTimeEstimate estimate_proc_times(const Scenario& s, std::span<const ClusterProfile> profiles) {
  std::optional<std::uint64_t> resample;
  if (s.config.resample_gains) resample = derive_seed(s.config.seed, 6);
  return build_proc_time_matrix(s.config.tasks, profiles, s.channel, s.config.cycles_per_bit, s.convergence(),
                                resample, s.config.gain_mean);
}

inline Schedule run_policy(const Scenario& s, const ProcTimeMatrix& m, Policy policy) {
  switch (policy) {
    case Policy::Greedy: return greedy_schedule(s.graph, m);
    case Policy::Exhaustive: return exhaustive_schedule(s.graph, m, s.config.exhaustive_limit);
    case Policy::Ppo: return ppo_train(s.graph, m, s.config.ppo, derive_seed(s.config.seed, 5)).best;
  }
  fail(ErrorCode::ConfigError, "unknown policy");
}

struct CurveSample {
  std::int64_t round = 0;
  double time_s = 0.0;
  double accuracy = 0.0;
};

struct TaskOutcome {
  int task = 0;
  std::string name;
  std::size_t cluster = 0;
  std::int64_t rounds = 0;
  double gamma = 0.0;
  double start_s = 0.0;
  double finish_s = 0.0;
  double time_s = 0.0;
  std::vector<CurveSample> curve;
};

struct RunResult {
  std::string method;
  std::string policy;
  std::uint64_t seed = 0;
  double makespan_s = 0.0;
  std::vector<double> layer_times_s;
  double layer_sum_s = 0.0;
  std::vector<TaskOutcome> tasks;
  std::vector<std::size_t> cluster_sizes;
  std::vector<double> cluster_gammas;
  double mean_intra_cluster_emd = 0.0;
  Schedule schedule;
};

// partition -> cluster -> proc-time matrix -> schedule -> validate/evaluate,
// plus an analytic learning curve per task on its assigned cluster.
inline RunResult run_pipeline(const Scenario& s, Clusterer clusterer, Policy policy) {
  const auto assignment = cluster_clients(s, clusterer);
  const auto profiles = cluster_profiles(s, assignment);
  const auto estimate = estimate_proc_times(s, profiles);
  const auto schedule = run_policy(s, estimate.matrix, policy);
  validate_schedule(schedule, s.graph, estimate.matrix);
  const auto report = evaluate_schedule(schedule, s.layering);

  RunResult r;
  r.method = to_string(clusterer);
  r.policy = to_string(policy);
  r.seed = s.config.seed;
  r.makespan_s = report.makespan;
  r.layer_times_s = report.layer_times;
  r.layer_sum_s = report.layer_sum;
  r.cluster_sizes = assignment.sizes();
  for (const auto& p : profiles) r.cluster_gammas.push_back(p.gamma);
  r.mean_intra_cluster_emd =
      mean_intra_cluster_distance(pairwise_distance_matrix(client_distributions(s)), assignment);
  r.schedule = schedule;
  const auto conv = s.convergence();
  for (std::size_t v = 0; v < s.graph.size(); ++v) {
    TaskOutcome t;
    const auto& spec = s.config.tasks[v];
    t.task = spec.id;
    t.name = spec.name;
    t.cluster = schedule.cluster[v];
    t.rounds = estimate.rounds_for(v, t.cluster);
    t.gamma = profiles[t.cluster].gamma;
    t.start_s = schedule.start[v];
    t.finish_s = schedule.finish[v];
    t.time_s = report.task_times[v];
    const double per_round = t.time_s / static_cast<double>(t.rounds);
    for (const auto& pt : learning_curve(spec, conv, t.gamma, t.rounds))
      t.curve.push_back({pt.round, t.start_s + per_round * static_cast<double>(pt.round), pt.accuracy});
    r.tasks.push_back(std::move(t));
  }
  return r;
}

struct MethodSummary {
  std::string method;
  std::size_t runs = 0;
  double mean_makespan_s = 0.0;
  double sd_makespan_s = 0.0;
  double ci95_half_width_s = 0.0;  // Student-t, n - 1 degrees of freedom
  std::vector<double> mean_layer_times_s;
};

struct Comparison {
  std::vector<RunResult> runs;  // method-major, then seed
  std::vector<MethodSummary> summary;
};

inline MethodSummary summarize(const std::string& method, std::span<const RunResult> runs) {
  MethodSummary m;
  m.method = method;
  m.runs = runs.size();
  if (runs.empty()) return m;
  const auto n = static_cast<double>(runs.size());
  for (const auto& r : runs) {
    m.mean_makespan_s += r.makespan_s;
    if (m.mean_layer_times_s.size() < r.layer_times_s.size()) m.mean_layer_times_s.resize(r.layer_times_s.size(), 0.0);
    for (std::size_t l = 0; l < r.layer_times_s.size(); ++l) m.mean_layer_times_s[l] += r.layer_times_s[l];
  }
  m.mean_makespan_s /= n;
  for (auto& l : m.mean_layer_times_s) l /= n;
  if (runs.size() > 1) {
    double ss = 0.0;
    for (const auto& r : runs) ss += (r.makespan_s - m.mean_makespan_s) * (r.makespan_s - m.mean_makespan_s);
    m.sd_makespan_s = std::sqrt(ss / (n - 1.0));
    const boost::math::students_t dist(n - 1.0);
    const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
    m.ci95_half_width_s = t * m.sd_makespan_s / std::sqrt(n);
  }
  return m;
}

// Worker count: CODA_SIM_THREADS if set (>= 1), else hardware concurrency.
inline std::size_t worker_count() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CODA_SIM_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = static_cast<std::size_t>(v);
  }
  return n;
}

// Runs every method on scenarios regenerated for seeds base, base+1, ...
// Jobs fan out over workers; results land in fixed slots, so output does not
// depend on the worker count or completion order.
inline Comparison compare_baselines(const ScenarioConfig& base, std::size_t seeds, Policy policy,
                                    std::span<const Clusterer> methods = kAllClusterers,
                                    std::size_t workers = worker_count()) {
  base.validate();
  const std::size_t jobs = methods.size() * seeds;
  std::vector<std::optional<RunResult>> slots(jobs);
  std::vector<std::exception_ptr> errors(jobs);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      try {
        auto cfg = base;
        cfg.seed = base.seed + j % seeds;
        slots[j] = run_pipeline(generate_scenario(cfg), methods[j / seeds], policy);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < std::min(workers, jobs); ++w) pool.emplace_back(work);
    work();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  Comparison c;
  for (auto& s : slots) c.runs.push_back(std::move(*s));
  for (std::size_t k = 0; k < methods.size(); ++k)
    c.summary.push_back(summarize(to_string(methods[k]), std::span(c.runs).subspan(k * seeds, seeds)));
  return c;
}

}  // namespace codafl
