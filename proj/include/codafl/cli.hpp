#pragma once

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "error.hpp"
#include "experiment.hpp"
#include "io.hpp"

namespace codafl::cli {

enum ExitCode : int { kOk = 0, kValidationError = 1, kConfigError = 2 };

namespace detail {

inline void report(std::ostream& err, std::string_view kind, const std::string& message) {
  err << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
}

struct Common {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string out;

  ScenarioConfig config() const {
    auto c = scenario.empty() ? default_config() : load_scenario(scenario);
    if (seed) c.seed = *seed;
    c.validate();
    return c;
  }
};

// Returns the --out option so callers can mark it required.
inline CLI::Option* add_common(CLI::App* cmd, Common& c, const std::string& out_help) {
  cmd->add_option("--scenario", c.scenario, "Scenario JSON file (built-in defaults if omitted)");
  cmd->add_option("--seed", c.seed, "Override the scenario seed");
  return cmd->add_option("--out", c.out, out_help);
}

inline void emit(std::ostream& out, const std::string& path, const nlohmann::json& j) {
  if (path.empty())
    out << j.dump(2) << '\n';
  else
    write_json(path, j);
}

}  // namespace detail

// Parses argv, runs one subcommand and returns the process exit code:
// 0 success, 1 validation error (infeasible or oversized instance, invalid
// schedule), 2 configuration or usage error. Errors go to `err` as one JSON
// object per line.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Cluster-based client selection and dependency-aware scheduling simulator", "coda_sim"};
  app.require_subcommand(1);

  detail::Common common;
  std::string method = "coda", clusterer = "coda", policy = "greedy";
  std::size_t seeds = 50;

  auto* cluster = app.add_subcommand("cluster", "Cluster clients and write the assignment");
  detail::add_common(cluster, common, "Output JSON file (stdout if omitted)");
  cluster->add_option("--method", method, "coda | eb | kc | rc");

  auto* schedule = app.add_subcommand("schedule", "Cluster with --clusterer, schedule with --policy, write the schedule");
  detail::add_common(schedule, common, "Output JSON file (stdout if omitted)");
  schedule->add_option("--policy", policy, "ppo | greedy | exhaustive");
  schedule->add_option("--clusterer", clusterer, "coda | eb | kc | rc");

  auto* simulate = app.add_subcommand("simulate", "Run the full pipeline and write result, schedule and curves");
  detail::add_common(simulate, common, "Output directory")->required();
  simulate->add_option("--clusterer", clusterer, "coda | eb | kc | rc");
  simulate->add_option("--policy", policy, "ppo | greedy | exhaustive");

  std::string compare_policy = "ppo";
  auto* compare = app.add_subcommand("compare", "Compare all clusterers over several seeds; write CSV tables");
  detail::add_common(compare, common, "Output directory")->required();
  compare->add_option("--seeds", seeds, "Number of seeds (scenario seed, seed+1, ...)");
  compare->add_option("--policy", compare_policy, "ppo | greedy | exhaustive");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    detail::report(err, "UsageError", e.what());
    err << app.help();
    return kConfigError;
  }

  try {
    const auto config = common.config();
    if (cluster->parsed()) {
      const auto scenario = generate_scenario(config);
      const auto assignment = cluster_clients(scenario, parse_clusterer(method));
      const auto profiles = cluster_profiles(scenario, assignment);
      std::vector<double> gammas;
      for (const auto& p : profiles) gammas.push_back(p.gamma);
      const double intra =
          mean_intra_cluster_distance(pairwise_distance_matrix(client_distributions(scenario)), assignment);
      detail::emit(out, common.out, cluster_assignment_to_json(method, assignment, gammas, intra));
    } else if (schedule->parsed()) {
      const auto scenario = generate_scenario(config);
      const auto result = run_pipeline(scenario, parse_clusterer(clusterer), parse_policy(policy));
      detail::emit(out, common.out, schedule_to_json(result.schedule, result.layer_times_s));
    } else if (simulate->parsed()) {
      const auto scenario = generate_scenario(config);
      const auto result = run_pipeline(scenario, parse_clusterer(clusterer), parse_policy(policy));
      const std::filesystem::path dir = common.out;
      write_json(dir / "result.json", run_result_to_json(result));
      write_json(dir / "schedule.json", schedule_to_json(result.schedule, result.layer_times_s));
      write_file_atomic(dir / "learning_curves.csv", learning_curves_csv(result));
    } else if (compare->parsed()) {
      if (seeds < 1) fail(ErrorCode::ConfigError, "--seeds must be >= 1");
      const auto cmp = compare_baselines(config, seeds, parse_policy(compare_policy));
      const std::filesystem::path dir = common.out;
      write_file_atomic(dir / "runs.csv", runs_csv(cmp.runs));
      write_file_atomic(dir / "summary.csv", summary_csv(cmp.summary));
    }
  } catch (const Error& e) {
    detail::report(err, to_string(e.code()), e.what());
    return e.code() == ErrorCode::ConfigError ? kConfigError : kValidationError;
  } catch (const std::filesystem::filesystem_error& e) {
    detail::report(err, "IoError", e.what());
    return kConfigError;
  }
  return kOk;
}

}  // namespace codafl::cli
