#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "convergence.hpp"
#include "dag.hpp"
#include "error.hpp"
#include "heterogeneity.hpp"
#include "latency.hpp"
#include "random.hpp"

namespace codafl {

// Estimated seconds for every (task, cluster) pair, V x N.
//
// Entries are snapped to a 2^-20 s grid (about one microsecond) and kept
// below 2^30 s. Every clock value the environment can produce is then a sum
// of grid values that fits in a double's mantissa, so clock arithmetic (and
// the reward telescoping it implies) is exact.
class ProcTimeMatrix {
 public:
  static constexpr double kTick = 0x1.0p-20;
  static constexpr double kMaxSeconds = 0x1.0p30;

  ProcTimeMatrix() = default;
  ProcTimeMatrix(std::size_t tasks, std::size_t clusters)
      : tasks_(tasks), clusters_(clusters), seconds_(tasks * clusters, kInfeasible) {}

  // Rows are tasks; nullopt marks an infeasible pair.
  static ProcTimeMatrix from_optional_rows(const std::vector<std::vector<std::optional<double>>>& rows) {
    const std::size_t clusters = rows.empty() ? 0 : rows.front().size();
    ProcTimeMatrix m(rows.size(), clusters);
    for (std::size_t v = 0; v < rows.size(); ++v) {
      require(rows[v].size() == clusters, ErrorCode::DimensionMismatch, "ragged proc-time rows");
      for (std::size_t i = 0; i < clusters; ++i)
        if (rows[v][i]) m.set(v, i, *rows[v][i]);
    }
    return m;
  }

  static ProcTimeMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    std::vector<std::vector<std::optional<double>>> opt;
    for (const auto& r : rows) opt.emplace_back(r.begin(), r.end());
    return from_optional_rows(opt);
  }

  static double quantize(double seconds) {
    return std::max(kTick, std::round(seconds / kTick) * kTick);
  }

  void set(std::size_t task, std::size_t cluster, double seconds) {
    require(std::isfinite(seconds) && seconds > 0.0, ErrorCode::InvalidParameter, "processing time must be positive");
    const double q = quantize(seconds);
    require(q < kMaxSeconds, ErrorCode::InvalidParameter, "processing time exceeds 2^30 s");
    seconds_.at(task * clusters_ + cluster) = q;
  }

  void mark_infeasible(std::size_t task, std::size_t cluster) { seconds_.at(task * clusters_ + cluster) = kInfeasible; }

  std::size_t tasks() const noexcept { return tasks_; }
  std::size_t clusters() const noexcept { return clusters_; }
  bool feasible(std::size_t task, std::size_t cluster) const { return seconds_.at(task * clusters_ + cluster) < kInfeasible; }
  double seconds(std::size_t task, std::size_t cluster) const { return seconds_.at(task * clusters_ + cluster); }

  double best(std::size_t task) const {
    double b = kInfeasible;
    for (std::size_t i = 0; i < clusters_; ++i) b = std::min(b, seconds(task, i));
    return b;
  }

  double max_finite() const {
    double m = 0.0;
    for (double s : seconds_)
      if (s < kInfeasible) m = std::max(m, s);
    return m;
  }

  // Every task must have at least one feasible cluster.
  void require_feasible() const {
    require(clusters_ > 0 || tasks_ == 0, ErrorCode::NoFeasibleCluster, "no clusters");
    for (std::size_t v = 0; v < tasks_; ++v)
      require(best(v) < kInfeasible, ErrorCode::NoFeasibleCluster,
              "task at index " + std::to_string(v) + " has no feasible cluster");
  }

 private:
  static constexpr double kInfeasible = std::numeric_limits<double>::infinity();
  std::size_t tasks_ = 0;
  std::size_t clusters_ = 0;
  std::vector<double> seconds_;
};

// One cluster as the proc-time builder sees it: its devices and the
// heterogeneity term Gamma that feeds the rounds estimate.
struct ClusterProfile {
  std::vector<DeviceSpec> devices;
  double gamma = 0.0;
};

// Gamma for a cluster from its members: L_d sum_u p_u Delta_u, where p_u is
// the member's data share and Delta_u its EMD from the cluster's own
// data-weighted mixture (the task's global distribution once the cluster is
// assigned to it).
inline double intra_cluster_gamma(std::span<const LabelDistribution> member_dists,
                                  std::span<const double> member_data_sizes, double l_div) {
  require(!member_dists.empty(), ErrorCode::EmptyCluster, "cluster has no members");
  require(member_dists.size() == member_data_sizes.size(), ErrorCode::DimensionMismatch,
          "member distributions and sizes differ in length");
  std::vector<WeightedMember> members;
  double total = 0.0;
  for (std::size_t u = 0; u < member_dists.size(); ++u) {
    members.push_back({member_dists[u], member_data_sizes[u]});
    total += member_data_sizes[u];
  }
  const auto reference = mixture(members);
  std::vector<double> q(member_dists.size()), deltas(member_dists.size());
  double qsum = 0.0;
  for (std::size_t u = 0; u < member_dists.size(); ++u) {
    q[u] = member_data_sizes[u] / total;
    qsum += q[u];
    deltas[u] = emd(member_dists[u], reference);
  }
  for (auto& w : q) w /= qsum;
  return gamma_bound(q, deltas, l_div);
}

struct ProcTimeEstimate {
  ProcTimeMatrix matrix;
  std::vector<std::int64_t> rounds;     // V x N, 0 where infeasible
  std::vector<double> round_seconds;    // V x N, straggler round time (static gains)
  std::size_t clusters = 0;

  std::int64_t rounds_for(std::size_t task, std::size_t cluster) const { return rounds.at(task * clusters + cluster); }
  double round_seconds_for(std::size_t task, std::size_t cluster) const {
    return round_seconds.at(task * clusters + cluster);
  }
};

// seconds[v][i] = rounds_required(v | Gamma_i) x straggler round time of cluster i.
// Pairs whose accuracy target is unreachable are marked infeasible.
inline ProcTimeEstimate build_proc_time_matrix(std::span<const TaskSpec> tasks, std::span<const ClusterProfile> clusters,
                                               const ChannelModel& channel, double cycles_per_bit,
                                               const ConvergenceParams& conv,
                                               std::optional<std::uint64_t> resample_seed = std::nullopt,
                                               double resample_mean_gain = 0.0) {
  channel.validate();
  ProcTimeEstimate out;
  out.matrix = ProcTimeMatrix(tasks.size(), clusters.size());
  out.rounds.assign(tasks.size() * clusters.size(), 0);
  out.round_seconds.assign(tasks.size() * clusters.size(), 0.0);
  out.clusters = clusters.size();
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    require(!clusters[i].devices.empty(), ErrorCode::EmptyCluster, "cluster " + std::to_string(i) + " is empty");
    for (const auto& d : clusters[i].devices) d.validate();
  }

  for (std::size_t v = 0; v < tasks.size(); ++v) {
    const auto& task = tasks[v];
    const WorkloadSpec wl{task.model_size_bits, cycles_per_bit, conv.local_steps};
    wl.validate();
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      const auto& devices = clusters[i].devices;
      out.round_seconds[v * clusters.size() + i] = straggler_round_time(devices, channel, wl);
      std::int64_t rounds = 0;
      try {
        rounds = rounds_required(task, conv, clusters[i].gamma);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::UnreachableAccuracy) throw;
        continue;
      }
      const double static_seconds = task_time(devices, channel, wl, rounds);
      if (!(static_seconds < ProcTimeMatrix::kMaxSeconds)) continue;
      double seconds = static_seconds;
      if (resample_seed) {
        GainResampler sampler(resample_mean_gain, derive_seed(*resample_seed, v * clusters.size() + i));
        seconds = task_time(devices, channel, wl, rounds, sampler);
      }
      if (!(seconds < ProcTimeMatrix::kMaxSeconds)) continue;
      out.matrix.set(v, i, seconds);
      out.rounds[v * clusters.size() + i] = rounds;
    }
  }
  out.matrix.require_feasible();
  return out;
}

// ---------------------------------------------------------------------------
// Schedules

struct Schedule {
  std::vector<int> task_ids;
  std::vector<std::size_t> cluster;  // phi, by task index
  std::vector<double> start;
  std::vector<double> finish;
  double makespan = 0.0;

  std::size_t tasks() const noexcept { return task_ids.size(); }
};

// Checks phi feasibility, finish = start + seconds, precedence, cluster
// exclusivity and makespan = max finish. Throws InvalidSchedule.
inline void validate_schedule(const Schedule& s, const TaskGraph& g, const ProcTimeMatrix& m) {
  const std::size_t n = g.size();
  auto bad = [](const std::string& why) { fail(ErrorCode::InvalidSchedule, why); };
  if (s.task_ids != g.ids() || s.cluster.size() != n || s.start.size() != n || s.finish.size() != n)
    bad("schedule does not cover the task graph");
  if (m.tasks() != n) bad("matrix rows do not match the task graph");
  double last = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    if (s.cluster[v] >= m.clusters()) bad("cluster index out of range");
    if (!m.feasible(v, s.cluster[v])) bad("task " + std::to_string(g.id(v)) + " placed on infeasible cluster");
    if (!(s.start[v] >= 0.0)) bad("negative start time");
    if (s.finish[v] != s.start[v] + m.seconds(v, s.cluster[v]))
      bad("finish != start + seconds for task " + std::to_string(g.id(v)));
    for (auto p : g.predecessors(v))
      if (s.start[v] < s.finish[p])
        bad("task " + std::to_string(g.id(v)) + " starts before predecessor " + std::to_string(g.id(p)) + " finishes");
    last = std::max(last, s.finish[v]);
  }
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (s.cluster[a] == s.cluster[b] && s.start[a] < s.finish[b] && s.start[b] < s.finish[a])
        bad("tasks " + std::to_string(g.id(a)) + " and " + std::to_string(g.id(b)) + " overlap on one cluster");
  if (s.makespan != last) bad("makespan is not the latest finish time");
}

struct ScheduleReport {
  double makespan = 0.0;
  std::vector<double> layer_times;  // T_l = max task duration within layer l
  double layer_sum = 0.0;           // sum_l T_l
  std::vector<double> task_times;   // by task index
  bool layer_synchronous = false;   // every layer starts when the previous layer's T_l has elapsed
};

// Reports the event-driven makespan next to the layer-barrier total sum_l max_v T_{l,v}.
inline ScheduleReport evaluate_schedule(const Schedule& s, const Layering& layering) {
  ScheduleReport r;
  r.makespan = s.makespan;
  r.task_times.resize(s.tasks());
  for (std::size_t v = 0; v < s.tasks(); ++v) r.task_times[v] = s.finish[v] - s.start[v];
  auto index_of = [&](int id) {
    const auto it = std::find(s.task_ids.begin(), s.task_ids.end(), id);
    require(it != s.task_ids.end(), ErrorCode::InvalidSchedule, "layering names unknown task " + std::to_string(id));
    return static_cast<std::size_t>(it - s.task_ids.begin());
  };
  r.layer_synchronous = true;
  double barrier = 0.0;
  for (const auto& layer : layering.layers) {
    double t = 0.0;
    for (int id : layer) {
      const auto v = index_of(id);
      t = std::max(t, r.task_times[v]);
      if (s.start[v] != barrier) r.layer_synchronous = false;
    }
    r.layer_times.push_back(t);
    barrier += t;
  }
  r.layer_sum = barrier;
  if (r.layer_synchronous && r.makespan != r.layer_sum)
    fail(ErrorCode::InvalidSchedule, "layer-synchronous schedule whose makespan differs from the layer sum");
  return r;
}

// ---------------------------------------------------------------------------
// Environment

enum class TaskStatus { NotReady, Ready, Running, Completed };

constexpr std::size_t kNoCluster = std::numeric_limits<std::size_t>::max();

struct ScheduleState {
  std::vector<TaskStatus> status;
  std::vector<std::size_t> cluster;  // assigned cluster per task, kNoCluster if unassigned
  std::vector<double> start;
  std::vector<double> finish;
  std::vector<double> cluster_busy_until;
  std::vector<std::size_t> cluster_task;  // running task per cluster, kNoCluster if idle
  double clock = 0.0;

  bool cluster_idle(std::size_t i) const { return cluster_task[i] == kNoCluster; }
  bool done() const {
    return std::all_of(status.begin(), status.end(), [](TaskStatus s) { return s == TaskStatus::Completed; });
  }
  bool any_running() const {
    return std::any_of(status.begin(), status.end(), [](TaskStatus s) { return s == TaskStatus::Running; });
  }
};

struct Action {
  enum class Kind { Assign, Wait };
  Kind kind = Kind::Wait;
  std::size_t task = 0;
  std::size_t cluster = 0;

  static Action assign(std::size_t task, std::size_t cluster) { return {Kind::Assign, task, cluster}; }
  static Action wait() { return {}; }

  friend bool operator==(const Action&, const Action&) = default;
};

struct StepResult {
  ScheduleState state;
  double reward = 0.0;
  bool done = false;
};

inline void promote_ready(ScheduleState& s, const TaskGraph& g) {
  for (std::size_t v = 0; v < g.size(); ++v) {
    if (s.status[v] != TaskStatus::NotReady) continue;
    const auto& preds = g.predecessors(v);
    if (std::all_of(preds.begin(), preds.end(), [&](std::size_t p) { return s.status[p] == TaskStatus::Completed; }))
      s.status[v] = TaskStatus::Ready;
  }
}

inline ScheduleState env_reset(const TaskGraph& g, const ProcTimeMatrix& m) {
  require(m.tasks() == g.size(), ErrorCode::DimensionMismatch, "matrix rows do not match the task graph");
  ScheduleState s;
  s.status.assign(g.size(), TaskStatus::NotReady);
  s.cluster.assign(g.size(), kNoCluster);
  s.start.assign(g.size(), 0.0);
  s.finish.assign(g.size(), 0.0);
  s.cluster_busy_until.assign(m.clusters(), 0.0);
  s.cluster_task.assign(m.clusters(), kNoCluster);
  promote_ready(s, g);
  return s;
}

inline bool action_valid(const ScheduleState& s, const Action& a, const ProcTimeMatrix& m) {
  if (a.kind == Action::Kind::Wait) return s.any_running();
  return a.task < s.status.size() && a.cluster < m.clusters() && s.status[a.task] == TaskStatus::Ready &&
         s.cluster_idle(a.cluster) && m.feasible(a.task, a.cluster);
}

// All valid actions: assignments in (task, cluster) order, then Wait.
inline std::vector<Action> valid_actions(const ScheduleState& s, const ProcTimeMatrix& m) {
  std::vector<Action> out;
  for (std::size_t v = 0; v < s.status.size(); ++v) {
    if (s.status[v] != TaskStatus::Ready) continue;
    for (std::size_t i = 0; i < m.clusters(); ++i)
      if (s.cluster_idle(i) && m.feasible(v, i)) out.push_back(Action::assign(v, i));
  }
  if (s.any_running()) out.push_back(Action::wait());
  return out;
}

// Assign starts a task now; Wait jumps to the earliest running finish and
// completes every task finishing then. Reward is minus the clock advance, so
// an episode's rewards sum to minus the makespan.
inline StepResult env_step(const ScheduleState& state, const Action& action, const ProcTimeMatrix& m,
                           const TaskGraph& g) {
  require(action_valid(state, action, m), ErrorCode::InvalidAction,
          action.kind == Action::Kind::Wait ? "wait with nothing running"
                                            : "assign task index " + std::to_string(action.task) + " to cluster " +
                                                  std::to_string(action.cluster));
  StepResult r{state, 0.0, false};
  auto& s = r.state;
  if (action.kind == Action::Kind::Assign) {
    const auto v = action.task, i = action.cluster;
    s.status[v] = TaskStatus::Running;
    s.cluster[v] = i;
    s.start[v] = s.clock;
    s.finish[v] = s.clock + m.seconds(v, i);
    s.cluster_task[i] = v;
    s.cluster_busy_until[i] = s.finish[v];
    return r;
  }
  double next = std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < s.status.size(); ++v)
    if (s.status[v] == TaskStatus::Running) next = std::min(next, s.finish[v]);
  r.reward = -(next - s.clock);
  s.clock = next;
  for (std::size_t v = 0; v < s.status.size(); ++v) {
    if (s.status[v] == TaskStatus::Running && s.finish[v] == next) {
      s.status[v] = TaskStatus::Completed;
      s.cluster_task[s.cluster[v]] = kNoCluster;
    }
  }
  promote_ready(s, g);
  r.done = s.done();
  return r;
}

inline Schedule schedule_from_state(const ScheduleState& s, const TaskGraph& g) {
  require(s.done(), ErrorCode::InvalidSchedule, "episode not finished");
  Schedule out;
  out.task_ids = g.ids();
  out.cluster = s.cluster;
  out.start = s.start;
  out.finish = s.finish;
  out.makespan = 0.0;
  for (double f : s.finish) out.makespan = std::max(out.makespan, f);
  return out;
}

// Rollout choosing uniformly among valid actions.
inline Schedule random_rollout(const TaskGraph& g, const ProcTimeMatrix& m, Rng& rng,
                               std::vector<double>* rewards = nullptr) {
  m.require_feasible();
  auto s = env_reset(g, m);
  while (!s.done()) {
    const auto actions = valid_actions(s, m);
    const auto& a = actions[static_cast<std::size_t>(rng.below(actions.size()))];
    auto step = env_step(s, a, m, g);
    if (rewards) rewards->push_back(step.reward);
    s = std::move(step.state);
  }
  return schedule_from_state(s, g);
}

// ---------------------------------------------------------------------------
// Policies

// List scheduling: at each decision point repeatedly start the ready-task /
// idle-cluster pair with the earliest finish time (ties: lower task, then
// lower cluster); when nothing more can start, wait for the next completion.
inline Schedule greedy_schedule(const TaskGraph& g, const ProcTimeMatrix& m) {
  m.require_feasible();
  auto s = env_reset(g, m);
  while (!s.done()) {
    std::optional<Action> best;
    double best_finish = std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < g.size(); ++v) {
      if (s.status[v] != TaskStatus::Ready) continue;
      for (std::size_t i = 0; i < m.clusters(); ++i) {
        if (!s.cluster_idle(i) || !m.feasible(v, i)) continue;
        const double f = s.clock + m.seconds(v, i);
        if (f < best_finish) {
          best_finish = f;
          best = Action::assign(v, i);
        }
      }
    }
    s = env_step(s, best ? *best : Action::wait(), m, g).state;
  }
  return schedule_from_state(s, g);
}

// Exact minimum-makespan schedule for small instances.
//
// Enumerates every task -> cluster mapping and, per mapping, every order of
// the tasks sharing a cluster. With earliest-start timing a (mapping, order)
// pair fixes the schedule: each task starts when its predecessors and the
// previous task on its cluster have finished. Orders that contradict the
// precedence relation are skipped. Search is pruned with a load bound.
inline Schedule exhaustive_schedule(const TaskGraph& g, const ProcTimeMatrix& m, std::size_t limit = 8) {
  const std::size_t n = g.size(), k = m.clusters();
  require(n <= limit && k <= limit, ErrorCode::InstanceTooLarge,
          std::to_string(n) + " tasks x " + std::to_string(k) + " clusters exceeds exhaustive limit " +
              std::to_string(limit));
  require(m.tasks() == n, ErrorCode::DimensionMismatch, "matrix rows do not match the task graph");
  if (n == 0) {
    Schedule empty;
    return empty;
  }
  m.require_feasible();

  // reach[a][b]: a must precede b (transitively).
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  const auto topo = [&] {
    std::vector<std::size_t> indeg(n), order;
    for (std::size_t v = 0; v < n; ++v) indeg[v] = g.predecessors(v).size();
    for (std::size_t v = 0; v < n; ++v)
      if (indeg[v] == 0) order.push_back(v);
    for (std::size_t h = 0; h < order.size(); ++h)
      for (auto w : g.successors(order[h]))
        if (--indeg[w] == 0) order.push_back(w);
    require(order.size() == n, ErrorCode::CyclicDependency, "task graph has a cycle");
    return order;
  }();
  for (auto it = topo.rbegin(); it != topo.rend(); ++it)
    for (auto w : g.successors(*it)) {
      reach[*it][w] = true;
      for (std::size_t x = 0; x < n; ++x)
        if (reach[w][x]) reach[*it][x] = true;
    }

  // Critical path with each task at its fastest cluster: a mapping-free lower bound.
  double critical = 0.0;
  {
    std::vector<double> done(n, 0.0);
    for (auto v : topo) {
      double st = 0.0;
      for (auto p : g.predecessors(v)) st = std::max(st, done[p]);
      done[v] = st + m.best(v);
      critical = std::max(critical, done[v]);
    }
  }

  std::optional<Schedule> best;
  double best_makespan = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> phi(n, 0);
  std::vector<std::vector<std::size_t>> per_cluster(k);
  std::vector<double> start(n), finish(n);
  std::vector<std::size_t> prev_on_cluster(n);

  auto evaluate_orders = [&] {
    // Times under the current per-cluster orders; false if the orders
    // together with precedence form a cycle.
    for (std::size_t c = 0; c < k; ++c) {
      const auto& order = per_cluster[c];
      for (std::size_t a = 0; a < order.size(); ++a) {
        prev_on_cluster[order[a]] = a == 0 ? kNoCluster : order[a - 1];
        for (std::size_t b = a + 1; b < order.size(); ++b)
          if (reach[order[b]][order[a]]) return;
      }
    }
    std::vector<bool> placed(n, false);
    std::size_t count = 0;
    double makespan = 0.0;
    while (count < n) {
      bool progress = false;
      for (auto v : topo) {
        if (placed[v]) continue;
        const auto prev = prev_on_cluster[v];
        if (prev != kNoCluster && !placed[prev]) continue;
        const auto& preds = g.predecessors(v);
        if (!std::all_of(preds.begin(), preds.end(), [&](std::size_t p) { return placed[p]; })) continue;
        double st = prev == kNoCluster ? 0.0 : finish[prev];
        for (auto p : g.predecessors(v)) st = std::max(st, finish[p]);
        start[v] = st;
        finish[v] = st + m.seconds(v, phi[v]);
        makespan = std::max(makespan, finish[v]);
        placed[v] = true;
        ++count;
        progress = true;
      }
      if (!progress) return;
    }
    if (makespan < best_makespan) {
      best_makespan = makespan;
      Schedule s;
      s.task_ids = g.ids();
      s.cluster = phi;
      s.start = start;
      s.finish = finish;
      s.makespan = makespan;
      best = std::move(s);
    }
  };

  // Recurse over clusters, permuting each cluster's task list in turn.
  auto permute = [&](auto&& self, std::size_t c) -> void {
    if (best_makespan <= critical) return;
    if (c == k) {
      evaluate_orders();
      return;
    }
    auto& order = per_cluster[c];
    std::sort(order.begin(), order.end());
    do {
      self(self, c + 1);
    } while (std::next_permutation(order.begin(), order.end()));
  };

  // Odometer over feasible mappings.
  std::vector<std::vector<std::size_t>> options(n);
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t i = 0; i < k; ++i)
      if (m.feasible(v, i)) options[v].push_back(i);
  std::vector<std::size_t> digit(n, 0);
  for (;;) {
    for (std::size_t v = 0; v < n; ++v) phi[v] = options[v][digit[v]];
    std::vector<double> load(k, 0.0);
    for (std::size_t v = 0; v < n; ++v) load[phi[v]] += m.seconds(v, phi[v]);
    const double bound = std::max(critical, *std::max_element(load.begin(), load.end()));
    if (bound < best_makespan) {
      for (auto& pc : per_cluster) pc.clear();
      for (std::size_t v = 0; v < n; ++v) per_cluster[phi[v]].push_back(v);
      permute(permute, 0);
    }
    std::size_t pos = 0;
    while (pos < n && ++digit[pos] == options[pos].size()) digit[pos++] = 0;
    if (pos == n) break;
  }
  if (!best) {
    Schedule empty;
    empty.task_ids = g.ids();
    return empty;
  }
  return *best;
}

// Keeps the lowest-makespan schedule offered so far. The merge is commutative
// (ties broken by the assignment vector), so concurrent offers in any order
// end at the same schedule.
class BestScheduleTracker {
 public:
  bool offer(const Schedule& s) {
    std::lock_guard lock(mutex_);
    if (!best_ || s.makespan < best_->makespan ||
        (s.makespan == best_->makespan && std::tie(s.cluster, s.start) < std::tie(best_->cluster, best_->start))) {
      best_ = s;
      return true;
    }
    return false;
  }

  std::optional<Schedule> best() const {
    std::lock_guard lock(mutex_);
    return best_;
  }

 private:
  mutable std::mutex mutex_;
  std::optional<Schedule> best_;
};

}  // namespace codafl
