// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <codafl/codafl.hpp>
#include <codafl/cli.hpp>

#include "../schedule_oracle.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

using namespace codafl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Direct summation written independently of the library.
double emd_oracle(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) s += p[k] > q[k] ? p[k] - q[k] : q[k] - p[k];
  return s;
}

Outcome emd_equivalence() {
  Rng rng(101);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t y = 1 + rng.below(20);
    const double alpha = rng.uniform(0.05, 5.0);
    const auto p = rng.dirichlet(y, alpha), q = rng.dirichlet(y, alpha);
    worst = std::max(worst, std::abs(emd(LabelDistribution(p), LabelDistribution(q)) - emd_oracle(p, q)));
  }
  return {worst <= 1e-12, fmt("max |emd - oracle| = %.3g over 1000 pairs", worst)};
}

Outcome rounds_monotone() {
  Rng rng(202);
  int checked = 0, violations = 0;
  for (int draw = 0; draw < 100; ++draw) {
    ConvergenceParams p;
    p.mu = rng.uniform(0.01, 0.5);
    p.eta = rng.uniform(0.01, 0.5);
    p.local_steps = 1 + static_cast<int>(rng.below(8));
    if (p.mu * p.eta * p.local_steps >= 1.0) p.eta = 0.9 / (p.mu * p.local_steps);
    p.grad_bound = rng.uniform(0.001, 0.05);
    p.sigma_sq = rng.uniform(0.1, 2.0);
    p.participants = 100;
    p.l_div = rng.uniform(0.5, 2.0);
    TaskSpec t{1, "t", rng.uniform(0.3, 0.9), rng.uniform(10.0, 40.0), 0.0, 0.5e6};
    const std::size_t clusters = 1 + rng.below(6);
    std::vector<double> q(clusters), delta(clusters);
    double qs = 0.0;
    for (auto& w : q) qs += (w = rng.uniform(0.1, 1.0));
    for (auto& w : q) w /= qs;
    for (auto& d : delta) d = rng.uniform(0.0, 0.3);
    // Sweep each cluster's EMD upward in turn, holding the others.
    for (std::size_t i = 0; i < clusters; ++i) {
      std::int64_t previous = 0;
      auto sweep = delta;
      for (double d = 0.0; d <= 2.0; d += 0.02) {
        sweep[i] = d;
        std::int64_t r = 0;
        try {
          r = rounds_required(t, p, gamma_bound(q, sweep, p.l_div));
        } catch (const Error& e) {
          if (e.code() != ErrorCode::UnreachableAccuracy) throw;
          r = std::numeric_limits<std::int64_t>::max();
        }
        ++checked;
        if (r < previous) ++violations;
        previous = r;
      }
    }
  }
  return {violations == 0, fmt("%d violations in %d sweep steps", violations, checked)};
}

Outcome rate_sanity() {
  const ChannelModel unit{20e6, 0.5};
  const DeviceSpec snr1{2e9, 0.25, 2.0, 1e6};
  const double r1 = transmission_rate(snr1, unit);
  const double rel1 = std::abs(r1 - 20e6) / 20e6;

  const double noise = std::pow(10.0, -43.0 / 10.0) / 1000.0;
  const double independent = 20e6 * std::log(1.0 + 0.2 * 2.5e-7 / noise) / std::log(2.0);
  const ChannelModel ref{20e6, dbm_to_watts(-43.0)};
  const double r2 = transmission_rate(DeviceSpec{2e9, 0.2, 2.5e-7, 1e6}, ref);
  const double rel2 = std::abs(r2 - independent) / independent;
  return {rel1 <= 1e-9 && rel2 <= 1e-6, fmt("SNR=1 rel err %.2g; reference point %.6e b/s, rel err %.2g", rel1, r2, rel2)};
}

struct Instance {
  TaskGraph graph;
  ProcTimeMatrix matrix;
};

Instance random_instance(Rng& rng, std::size_t max_tasks, std::size_t max_clusters) {
  const std::size_t v = 1 + rng.below(max_tasks), n = 1 + rng.below(max_clusters);
  std::vector<int> ids(v);
  std::iota(ids.begin(), ids.end(), 1);
  std::vector<Edge> edges;
  for (std::size_t a = 0; a < v; ++a)
    for (std::size_t b = a + 1; b < v; ++b)
      if (rng.uniform01() < 0.4) edges.push_back({ids[a], ids[b]});
  ProcTimeMatrix m(v, n);
  for (std::size_t t = 0; t < v; ++t) {
    const auto always = rng.below(n);
    for (std::size_t c = 0; c < n; ++c)
      if (c == always || rng.uniform01() < 0.9) m.set(t, c, rng.uniform(1.0, 20.0));
  }
  return {TaskGraph(ids, edges), m};
}

Outcome scheduler_oracle() {
  Rng rng(303);
  int mismatches = 0, greedy_below = 0, within = 0;
  const int n = 200;
  for (int i = 0; i < n; ++i) {
    const auto inst = random_instance(rng, 5, 3);
    const double best = exhaustive_schedule(inst.graph, inst.matrix).makespan;
    if (best != oracle::brute_force_makespan(inst.graph, inst.matrix)) ++mismatches;
    const double greedy = greedy_schedule(inst.graph, inst.matrix).makespan;
    if (greedy < best) ++greedy_below;
    if (greedy <= 1.3 * best) ++within;
  }
  return {mismatches == 0 && greedy_below == 0 && within >= 180,
          fmt("%d oracle mismatches, %d greedy < optimum, greedy within 30%% in %d/%d", mismatches, greedy_below,
              within, n)};
}

Outcome episode_return_identity() {
  Rng rng(404);
  int exact = 0;
  for (int i = 0; i < 100; ++i) {
    const auto inst = random_instance(rng, 8, 4);
    std::vector<double> rewards;
    const auto s = random_rollout(inst.graph, inst.matrix, rng, &rewards);
    double sum = 0.0;
    for (double r : rewards) sum += r;
    if (sum == -s.makespan) ++exact;
  }
  return {exact == 100, fmt("%d/100 rollouts sum exactly to -makespan", exact)};
}

Outcome clustering_quality() {
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    std::vector<LabelDistribution> dists;
    for (const auto& h : partition_data(100, 10, 0.3, 300, 900, seed)) dists.push_back(normalize(h));
    const auto d = pairwise_distance_matrix(dists);
    const double agg = mean_intra_cluster_distance(d, agglomerative_cluster(d, 10));
    const double rnd = mean_intra_cluster_distance(d, random_cluster(100, 10, seed));
    if (agg < rnd) ++wins;
  }
  return {wins >= 95, fmt("agglomerative below random in %d/100 seeds", wins)};
}

Outcome directional_reproduction() {
  auto base = default_config();
  base.seed = 1;
  const Clusterer methods[] = {Clusterer::Coda, Clusterer::EmdBalanced, Clusterer::Random};
  const auto cmp = compare_baselines(base, 50, Policy::Ppo, methods);
  int coda_le_rc = 0;
  for (std::size_t s = 0; s < 50; ++s)
    if (cmp.runs[s].makespan_s <= cmp.runs[100 + s].makespan_s) ++coda_le_rc;
  const double coda = cmp.summary[0].mean_makespan_s, eb = cmp.summary[1].mean_makespan_s,
               rc = cmp.summary[2].mean_makespan_s;
  return {coda_le_rc >= 45 && coda <= eb,
          fmt("coda <= rc in %d/50 seeds; mean makespan coda %.1f s, eb %.1f s, rc %.1f s", coda_le_rc, coda, eb, rc)};
}

Outcome ppo_competence() {
  int le_greedy = 0, strictly = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    auto cfg = default_config();
    cfg.seed = seed;
    const auto sc = generate_scenario(cfg);
    const auto est = estimate_proc_times(sc, cluster_profiles(sc, cluster_clients(sc, Clusterer::Coda)));
    const auto res = ppo_train(sc.graph, est.matrix, cfg.ppo, derive_seed(seed, 5));
    const double greedy = greedy_schedule(sc.graph, est.matrix).makespan;
    if (res.best.makespan <= greedy) ++le_greedy;
    if (res.best.makespan < greedy) ++strictly;
  }
  Rng rng(808);
  int optimal = 0, greedy_optimal = 0;
  const int small = 30;
  for (int i = 0; i < small; ++i) {
    const auto inst = random_instance(rng, 4, 3);
    const double best = exhaustive_schedule(inst.graph, inst.matrix).makespan;
    const auto res = ppo_train(inst.graph, inst.matrix, PpoHyperparams{}, static_cast<std::uint64_t>(i));
    if (res.best.makespan == best) ++optimal;
    if (greedy_schedule(inst.graph, inst.matrix).makespan == best) ++greedy_optimal;
  }
  return {le_greedy >= 24 && optimal >= 18,
          fmt("best-seen <= greedy in %d/30 default-scenario seeds (strictly better in %d); exhaustive optimum "
              "reached in %d/%d small instances (greedy alone: %d)",
              le_greedy, strictly, optimal, small, greedy_optimal)};
}

Outcome layering_golden() {
  const auto cfg = default_config();
  const auto layers = validate_and_layer(cfg.graph()).layers;
  std::vector<std::vector<std::string>> names;
  for (const auto& layer : layers) {
    names.emplace_back();
    for (int id : layer)
      for (const auto& t : cfg.tasks)
        if (t.id == id) names.back().push_back(t.name);
  }
  const std::vector<std::vector<std::string>> expected{{"KMNIST"}, {"MNIST", "FashionMNIST"}, {"QMNIST"}};
  std::string shown;
  for (const auto& l : names) {
    shown += "{";
    for (std::size_t i = 0; i < l.size(); ++i) shown += (i ? "," : "") + l[i];
    shown += "}";
  }
  return {names == expected, "layers " + shown};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Every file under `dir`, relative path -> bytes.
std::vector<std::pair<std::string, std::string>> snapshot(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out.emplace_back(fs::relative(e.path(), dir).string(), slurp(e.path()));
  std::sort(out.begin(), out.end());
  return out;
}

Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() / "codafl_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  auto small = default_config();
  small.client_count = 40;
  small.cluster_count = 5;
  const std::string small_path = (root / "small.json").string();
  write_json(small_path, to_json(small));
  const std::vector<std::vector<std::string>> invocations{
      {"cluster", "--method", "coda", "--seed", "7"},
      {"cluster", "--method", "kc", "--seed", "7"},
      {"schedule", "--policy", "greedy", "--seed", "7"},
      {"schedule", "--policy", "ppo", "--clusterer", "rc", "--seed", "3"},
      {"simulate", "--clusterer", "coda", "--policy", "greedy", "--seed", "7"},
      {"simulate", "--scenario", small_path, "--clusterer", "eb", "--policy", "exhaustive", "--seed", "2"},
      {"compare", "--seeds", "3", "--policy", "greedy", "--seed", "11"},
  };
  int identical = 0;
  std::string failures;
  for (std::size_t k = 0; k < invocations.size(); ++k) {
    std::vector<std::pair<std::string, std::string>> runs[2];
    std::string stdouts[2];
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path dir = root / std::to_string(k) / std::to_string(rep);
      fs::create_directories(dir);
      auto args = invocations[k];
      args.insert(args.begin(), "coda_sim");
      args.push_back("--out");
      args.push_back(args[1] == "simulate" || args[1] == "compare" ? dir.string() : (dir / "out.json").string());
      std::ostringstream out, err;
      const int code = cli::run(args, out, err);
      if (code != 0) failures += " [" + args[1] + " exit " + std::to_string(code) + "]";
      stdouts[rep] = out.str();
      runs[rep] = snapshot(dir);
    }
    if (runs[0] == runs[1] && stdouts[0] == stdouts[1] && !runs[0].empty())
      ++identical;
    else
      failures += " [#" + std::to_string(k) + " differs]";
  }
  fs::remove_all(root);
  const int total = static_cast<int>(invocations.size());
  return {identical == total, fmt("%d/%d invocations byte-identical across repeats", identical, total) + failures};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"EMD oracle equivalence", emd_equivalence},
      {"rounds_required monotone in cluster EMD", rounds_monotone},
      {"transmission rate sanity", rate_sanity},
      {"scheduler vs enumeration oracle", scheduler_oracle},
      {"episode return identity", episode_return_identity},
      {"clustering quality", clustering_quality},
      {"directional reproduction (coda vs rc/eb)", directional_reproduction},
      {"PPO competence", ppo_competence},
      {"layering golden test", layering_golden},
      {"CLI determinism", cli_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %2zu %-42s %8.2f s  %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
