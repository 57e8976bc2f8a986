#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "clustering.hpp"
#include "error.hpp"
#include "experiment.hpp"
#include "scheduler.hpp"

namespace codafl {

using json = nlohmann::json;

namespace detail {

// Reads `key` into `out` if present; unknown keys are rejected by check_keys.
template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("field '") + key + "': " + e.what());
  }
}

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) fail(ErrorCode::ConfigError, where + " must be a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, _] : j.items())
    if (!ok.count(k)) fail(ErrorCode::ConfigError, "unknown field '" + k + "' in " + where);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scenario config

inline json to_json(const ScenarioConfig& c) {
  json tasks = json::array();
  for (const auto& t : c.tasks)
    tasks.push_back({{"id", t.id},
                     {"name", t.name},
                     {"target_accuracy", t.target_accuracy},
                     {"initial_loss", t.initial_loss},
                     {"optimal_loss", t.optimal_loss},
                     {"model_size_bits", t.model_size_bits}});
  json edges = json::array();
  for (const auto& e : c.edges) edges.push_back({e.from, e.to});
  const auto& cv = c.convergence;
  const auto& p = c.ppo;
  return {
      {"seed", c.seed},
      {"client_count", c.client_count},
      {"cluster_count", c.cluster_count},
      {"class_count", c.class_count},
      {"dirichlet_alpha", c.dirichlet_alpha},
      {"samples_per_client", {c.samples_min, c.samples_max}},
      {"bits_per_sample", c.bits_per_sample},
      {"cpu_hz", {c.cpu_min_hz, c.cpu_max_hz}},
      {"gain_mean", c.gain_mean},
      {"transmit_power_w", c.transmit_power_w},
      {"noise_dbm", c.noise_dbm},
      {"bandwidth_hz", c.bandwidth_hz},
      {"cycles_per_bit", c.cycles_per_bit},
      {"resample_gains", c.resample_gains},
      {"convergence",
       {{"mu", cv.mu},
        {"eta", cv.eta},
        {"local_steps", cv.local_steps},
        {"grad_bound", cv.grad_bound},
        {"sigma_sq", cv.sigma_sq},
        {"l_div", cv.l_div},
        {"l_smooth", cv.l_smooth}}},
      {"tasks", tasks},
      {"edges", edges},
      {"exhaustive_limit", c.exhaustive_limit},
      {"ppo",
       {{"episodes", p.episodes},
        {"episodes_per_batch", p.episodes_per_batch},
        {"epochs", p.epochs},
        {"hidden", p.hidden},
        {"clip", p.clip},
        {"discount", p.discount},
        {"learning_rate", p.learning_rate},
        {"entropy_coef", p.entropy_coef},
        {"value_coef", p.value_coef}}},
  };
}

// Missing fields take the defaults of default_config(); unknown fields are errors.
inline ScenarioConfig scenario_from_json(const json& j) {
  using detail::read_opt;
  detail::check_keys(j,
                     {"seed", "client_count", "cluster_count", "class_count", "dirichlet_alpha", "samples_per_client",
                      "bits_per_sample", "cpu_hz", "gain_mean", "transmit_power_w", "noise_dbm", "bandwidth_hz",
                      "cycles_per_bit", "resample_gains", "convergence", "tasks", "edges", "exhaustive_limit", "ppo"},
                     "scenario");
  auto c = default_config();
  read_opt(j, "seed", c.seed);
  read_opt(j, "client_count", c.client_count);
  read_opt(j, "cluster_count", c.cluster_count);
  read_opt(j, "class_count", c.class_count);
  read_opt(j, "dirichlet_alpha", c.dirichlet_alpha);
  read_opt(j, "bits_per_sample", c.bits_per_sample);
  read_opt(j, "gain_mean", c.gain_mean);
  read_opt(j, "transmit_power_w", c.transmit_power_w);
  read_opt(j, "noise_dbm", c.noise_dbm);
  read_opt(j, "bandwidth_hz", c.bandwidth_hz);
  read_opt(j, "cycles_per_bit", c.cycles_per_bit);
  read_opt(j, "resample_gains", c.resample_gains);
  read_opt(j, "exhaustive_limit", c.exhaustive_limit);
  auto read_pair = [&](const char* key, auto& lo, auto& hi) {
    if (!j.contains(key)) return;
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 2) fail(ErrorCode::ConfigError, std::string("'") + key + "' must be [lo, hi]");
    read_opt(json{{"lo", a[0]}}, "lo", lo);
    read_opt(json{{"hi", a[1]}}, "hi", hi);
  };
  read_pair("samples_per_client", c.samples_min, c.samples_max);
  read_pair("cpu_hz", c.cpu_min_hz, c.cpu_max_hz);
  if (j.contains("convergence")) {
    const auto& cv = j.at("convergence");
    detail::check_keys(cv, {"mu", "eta", "local_steps", "grad_bound", "sigma_sq", "l_div", "l_smooth"}, "convergence");
    read_opt(cv, "mu", c.convergence.mu);
    read_opt(cv, "eta", c.convergence.eta);
    read_opt(cv, "local_steps", c.convergence.local_steps);
    read_opt(cv, "grad_bound", c.convergence.grad_bound);
    read_opt(cv, "sigma_sq", c.convergence.sigma_sq);
    read_opt(cv, "l_div", c.convergence.l_div);
    read_opt(cv, "l_smooth", c.convergence.l_smooth);
  }
  if (j.contains("ppo")) {
    const auto& p = j.at("ppo");
    detail::check_keys(p,
                       {"episodes", "episodes_per_batch", "epochs", "hidden", "clip", "discount", "learning_rate",
                        "entropy_coef", "value_coef"},
                       "ppo");
    read_opt(p, "episodes", c.ppo.episodes);
    read_opt(p, "episodes_per_batch", c.ppo.episodes_per_batch);
    read_opt(p, "epochs", c.ppo.epochs);
    read_opt(p, "hidden", c.ppo.hidden);
    read_opt(p, "clip", c.ppo.clip);
    read_opt(p, "discount", c.ppo.discount);
    read_opt(p, "learning_rate", c.ppo.learning_rate);
    read_opt(p, "entropy_coef", c.ppo.entropy_coef);
    read_opt(p, "value_coef", c.ppo.value_coef);
  }
  if (j.contains("tasks")) {
    const auto& ts = j.at("tasks");
    if (!ts.is_array()) fail(ErrorCode::ConfigError, "'tasks' must be an array");
    c.tasks.clear();
    for (const auto& t : ts) {
      detail::check_keys(t, {"id", "name", "target_accuracy", "initial_loss", "optimal_loss", "model_size_bits"},
                         "task");
      if (!t.contains("id")) fail(ErrorCode::ConfigError, "task without 'id'");
      TaskSpec spec{0, "", 0.5, 25.0, 0.0, 0.5e6};
      read_opt(t, "id", spec.id);
      spec.name = "task" + std::to_string(spec.id);
      read_opt(t, "name", spec.name);
      read_opt(t, "target_accuracy", spec.target_accuracy);
      read_opt(t, "initial_loss", spec.initial_loss);
      read_opt(t, "optimal_loss", spec.optimal_loss);
      read_opt(t, "model_size_bits", spec.model_size_bits);
      c.tasks.push_back(spec);
    }
    if (!j.contains("edges")) c.edges.clear();
  }
  if (j.contains("edges")) {
    const auto& es = j.at("edges");
    if (!es.is_array()) fail(ErrorCode::ConfigError, "'edges' must be an array of [from, to] pairs");
    c.edges.clear();
    for (const auto& e : es) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
        fail(ErrorCode::ConfigError, "each edge must be [from, to] task ids");
      c.edges.push_back({e[0].get<int>(), e[1].get<int>()});
    }
  }
  c.validate();
  return c;
}

inline ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigError, "cannot open scenario file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, "malformed JSON in " + path.string() + ": " + e.what());
  }
  return scenario_from_json(j);
}

// ---------------------------------------------------------------------------
// Schedules and results

inline json schedule_to_json(const Schedule& s, std::span<const double> layer_times) {
  json assignments = json::array();
  for (std::size_t v = 0; v < s.tasks(); ++v)
    assignments.push_back(
        {{"task", s.task_ids[v]}, {"cluster", s.cluster[v]}, {"start_s", s.start[v]}, {"finish_s", s.finish[v]}});
  return {{"assignments", assignments}, {"makespan_s", s.makespan}, {"layer_times_s", layer_times}};
}

struct ScheduleDocument {
  Schedule schedule;
  std::vector<double> layer_times_s;
};

inline ScheduleDocument schedule_from_json(const json& j) {
  ScheduleDocument d;
  try {
    for (const auto& a : j.at("assignments")) {
      d.schedule.task_ids.push_back(a.at("task").get<int>());
      d.schedule.cluster.push_back(a.at("cluster").get<std::size_t>());
      d.schedule.start.push_back(a.at("start_s").get<double>());
      d.schedule.finish.push_back(a.at("finish_s").get<double>());
    }
    d.schedule.makespan = j.at("makespan_s").get<double>();
    d.layer_times_s = j.at("layer_times_s").get<std::vector<double>>();
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("malformed schedule document: ") + e.what());
  }
  return d;
}

inline json run_result_to_json(const RunResult& r) {
  json tasks = json::array();
  for (const auto& t : r.tasks) {
    json curve = json::array();
    for (const auto& c : t.curve) curve.push_back({{"round", c.round}, {"time_s", c.time_s}, {"accuracy", c.accuracy}});
    tasks.push_back({{"task", t.task},
                     {"name", t.name},
                     {"cluster", t.cluster},
                     {"rounds", t.rounds},
                     {"gamma", t.gamma},
                     {"start_s", t.start_s},
                     {"finish_s", t.finish_s},
                     {"time_s", t.time_s},
                     {"learning_curve", curve}});
  }
  return {{"method", r.method},
          {"policy", r.policy},
          {"seed", r.seed},
          {"makespan_s", r.makespan_s},
          {"layer_times_s", r.layer_times_s},
          {"layer_sum_s", r.layer_sum_s},
          {"cluster_sizes", r.cluster_sizes},
          {"cluster_gammas", r.cluster_gammas},
          {"mean_intra_cluster_emd", r.mean_intra_cluster_emd},
          {"tasks", tasks},
          {"schedule", schedule_to_json(r.schedule, r.layer_times_s)}};
}

inline json cluster_assignment_to_json(const std::string& method, const ClusterAssignment& a,
                                       std::span<const double> gammas, double mean_intra_emd) {
  return {{"method", method},
          {"n_clusters", a.n_clusters()},
          {"labels", std::vector<std::size_t>(a.labels().begin(), a.labels().end())},
          {"cluster_sizes", a.sizes()},
          {"cluster_gammas", gammas},
          {"mean_intra_cluster_emd", mean_intra_emd}};
}

// ---------------------------------------------------------------------------
// CSV

inline std::string format_number(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

inline std::size_t max_layers(std::span<const RunResult> runs) {
  std::size_t n = 0;
  for (const auto& r : runs) n = std::max(n, r.layer_times_s.size());
  return n;
}

// One row per method x seed.
inline std::string runs_csv(std::span<const RunResult> runs) {
  const auto layers = max_layers(runs);
  std::ostringstream os;
  os << "method,policy,seed,makespan_s,layer_sum_s";
  for (std::size_t l = 0; l < layers; ++l) os << ",layer_" << l + 1 << "_s";
  os << ",mean_intra_cluster_emd\n";
  for (const auto& r : runs) {
    os << r.method << ',' << r.policy << ',' << r.seed << ',' << format_number(r.makespan_s) << ','
       << format_number(r.layer_sum_s);
    for (std::size_t l = 0; l < layers; ++l)
      os << ',' << (l < r.layer_times_s.size() ? format_number(r.layer_times_s[l]) : "");
    os << ',' << format_number(r.mean_intra_cluster_emd) << '\n';
  }
  return os.str();
}

inline std::string summary_csv(std::span<const MethodSummary> rows) {
  std::size_t layers = 0;
  for (const auto& r : rows) layers = std::max(layers, r.mean_layer_times_s.size());
  std::ostringstream os;
  os << "method,runs,mean_makespan_s,sd_makespan_s,ci95_half_width_s,ci95_relative";
  for (std::size_t l = 0; l < layers; ++l) os << ",mean_layer_" << l + 1 << "_s";
  os << '\n';
  for (const auto& r : rows) {
    const double rel = r.mean_makespan_s > 0.0 ? r.ci95_half_width_s / r.mean_makespan_s : 0.0;
    os << r.method << ',' << r.runs << ',' << format_number(r.mean_makespan_s) << ','
       << format_number(r.sd_makespan_s) << ',' << format_number(r.ci95_half_width_s) << ',' << format_number(rel);
    for (std::size_t l = 0; l < layers; ++l)
      os << ',' << (l < r.mean_layer_times_s.size() ? format_number(r.mean_layer_times_s[l]) : "");
    os << '\n';
  }
  return os.str();
}

inline std::string learning_curves_csv(const RunResult& r) {
  std::ostringstream os;
  os << "task,name,round,time_s,accuracy\n";
  for (const auto& t : r.tasks)
    for (const auto& c : t.curve)
      os << t.task << ',' << t.name << ',' << c.round << ',' << format_number(c.time_s) << ','
         << format_number(c.accuracy) << '\n';
  return os.str();
}

// Write to a sibling temp file, then rename over the target.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::ConfigError, "cannot write " + tmp.string());
    out << content;
    if (!out) fail(ErrorCode::ConfigError, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

}  // namespace codafl
