#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace codafl {

struct Edge {
  int from = 0;
  int to = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

// Precedence graph over task ids. Internally tasks are addressed by their
// position in ids(); ids themselves are arbitrary unique integers.
class TaskGraph {
 public:
  TaskGraph() = default;

  TaskGraph(std::vector<int> ids, std::vector<Edge> edges) : ids_(std::move(ids)), edges_(std::move(edges)) {
    auto sorted = ids_;
    std::sort(sorted.begin(), sorted.end());
    require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), ErrorCode::InvalidParameter,
            "duplicate task id");
    preds_.assign(ids_.size(), {});
    succs_.assign(ids_.size(), {});
    for (const auto& e : edges_) {
      require(e.from != e.to, ErrorCode::CyclicDependency, "self-loop on task " + std::to_string(e.from));
      const auto a = index_of(e.from), b = index_of(e.to);
      if (std::find(succs_[a].begin(), succs_[a].end(), b) != succs_[a].end()) continue;
      succs_[a].push_back(b);
      preds_[b].push_back(a);
    }
    for (auto& p : preds_) std::sort(p.begin(), p.end());
    for (auto& s : succs_) std::sort(s.begin(), s.end());
  }

  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<int>& ids() const noexcept { return ids_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  int id(std::size_t index) const { return ids_.at(index); }

  std::size_t index_of(int task_id) const {
    const auto it = std::find(ids_.begin(), ids_.end(), task_id);
    require(it != ids_.end(), ErrorCode::UnknownTask, "unknown task id " + std::to_string(task_id));
    return static_cast<std::size_t>(it - ids_.begin());
  }

  const std::vector<std::size_t>& predecessors(std::size_t index) const { return preds_.at(index); }
  const std::vector<std::size_t>& successors(std::size_t index) const { return succs_.at(index); }

 private:
  std::vector<int> ids_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> preds_;
  std::vector<std::vector<std::size_t>> succs_;
};

// Layers S_1..S_L of task ids, each sorted by id.
struct Layering {
  std::vector<std::vector<int>> layers;

  std::size_t depth() const noexcept { return layers.size(); }
};

// Longest-path (ASAP) layering: layer(v) = 1 + max layer of its predecessors.
// Throws CyclicDependencyError carrying a witness cycle.
inline Layering validate_and_layer(const TaskGraph& g) {
  const std::size_t n = g.size();
  // 0 = unvisited, 1 = on stack, 2 = done
  std::vector<int> state(n, 0);
  std::vector<std::size_t> order;
  std::vector<std::size_t> stack_path;
  order.reserve(n);

  // Iterative DFS so deep chains cannot blow the call stack.
  for (std::size_t root = 0; root < n; ++root) {
    if (state[root] != 0) continue;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
    state[root] = 1;
    stack_path.assign(1, root);
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      const auto& succ = g.successors(node);
      if (next < succ.size()) {
        const auto child = succ[next++];
        if (state[child] == 1) {
          std::vector<int> cycle;
          const auto start = std::find(stack_path.begin(), stack_path.end(), child);
          for (auto it = start; it != stack_path.end(); ++it) cycle.push_back(g.id(*it));
          cycle.push_back(g.id(child));
          std::string text;
          for (std::size_t i = 0; i < cycle.size(); ++i) text += (i ? " -> " : "") + std::to_string(cycle[i]);
          throw CyclicDependencyError(std::move(cycle), "cycle " + text);
        }
        if (state[child] == 0) {
          state[child] = 1;
          stack.emplace_back(child, 0);
          stack_path.push_back(child);
        }
      } else {
        state[node] = 2;
        order.push_back(node);
        stack.pop_back();
        stack_path.pop_back();
      }
    }
  }
  std::reverse(order.begin(), order.end());

  std::vector<std::size_t> level(n, 0);
  std::size_t depth = n == 0 ? 0 : 1;
  for (auto v : order)
    for (auto p : g.predecessors(v)) {
      level[v] = std::max(level[v], level[p] + 1);
      depth = std::max(depth, level[v] + 1);
    }

  Layering out;
  out.layers.resize(depth);
  for (std::size_t v = 0; v < n; ++v) out.layers[level[v]].push_back(g.id(v));
  for (auto& layer : out.layers) std::sort(layer.begin(), layer.end());
  return out;
}

// Tasks not yet completed whose predecessors all are.
inline std::set<int> ready_tasks(const TaskGraph& g, const std::set<int>& completed) {
  std::vector<bool> done(g.size(), false);
  for (int id : completed) done[g.index_of(id)] = true;
  std::set<int> ready;
  for (std::size_t v = 0; v < g.size(); ++v) {
    if (done[v]) continue;
    const auto& preds = g.predecessors(v);
    if (std::all_of(preds.begin(), preds.end(), [&](std::size_t p) { return done[p]; })) ready.insert(g.id(v));
  }
  return ready;
}

// Layer index (0-based) of every task, by position in g.ids().
inline std::vector<std::size_t> layer_of(const TaskGraph& g, const Layering& layering) {
  std::vector<std::size_t> out(g.size(), 0);
  for (std::size_t l = 0; l < layering.layers.size(); ++l)
    for (int id : layering.layers[l]) out[g.index_of(id)] = l;
  return out;
}

}  // namespace codafl
