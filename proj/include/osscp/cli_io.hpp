#pragma once

#include "osscp/osscp.hpp"
#include "osscp/scenarios.hpp"
#include "osscp/scp.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace osscp {

/// Malformed or invalid configuration. The message names the offending key
/// or the line and column of a syntax error.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A guess in a config: either the name of a scenario guess ("over",
/// "straight", "under", "lower-corridor") or an explicit specification.
struct GuessEntry {
  std::string name;
  std::optional<std::string> kind;    ///< explicit kind; name lookup when empty
  std::optional<double> offset;
  std::vector<Eigen::Vector2d> waypoints;

  friend bool operator==(const GuessEntry&, const GuessEntry&) = default;
};

/// Solver settings that replace the scenario defaults when present.
struct SolverOverrides {
  std::optional<double> w1, w2, w3, wp, rho, eps_c, eps_r, eps_s, qp_tol;
  std::optional<int> scp_max_iters, osscp_max_iters, qp_max_iters, threads;
  std::optional<std::string> inequality_penalty;
  std::optional<bool> stop_on_stagnation;
  std::optional<std::vector<bool>> consensus_mask;

  friend bool operator==(const SolverOverrides&, const SolverOverrides&) = default;
};

struct RunConfig {
  std::string scenario = "unicycle-basic";
  std::string method = "both";  ///< scp, osscp or both
  std::vector<GuessEntry> guesses;  ///< empty = scenario defaults
  ScenarioOverrides scenario_overrides;
  SolverOverrides solver;
  std::string output_dir = "out";
  std::uint64_t seed = 0;  ///< reserved; every algorithm is deterministic
  bool plot_data = true;

  void validate() const;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string write_config(const RunConfig& cfg);

/// Config with every solver and scenario value spelled out for `scenario`.
RunConfig default_config(const std::string& scenario);

/// One summary row.
struct RunEntry {
  std::string method;  ///< scp or osscp
  std::string guess;   ///< guess name, or the joined names for osscp
  double cost = 0.0;   ///< true penalized cost recomputed from `solution`
  int iterations = 0;
  bool converged = false;
  double wall_time = 0.0;
  std::string error;
  Trajectory solution;
};

struct RunReport {
  RunConfig config;
  Scenario scenario;
  std::vector<std::string> guess_names;
  std::vector<Trajectory> guesses;
  std::vector<ScpRunRecord> scp;
  std::optional<OsscpResult> osscp;
  std::string osscp_error;
  std::vector<RunEntry> rows;
  double wall_time = 0.0;

  /// 0 when every run converged, 2 otherwise.
  int exit_code() const;
};

/// Scenario, guesses and solver configs after applying the config.
Scenario resolve_scenario(const RunConfig& cfg);
std::vector<GuessSpec> resolve_guesses(const RunConfig& cfg, const Scenario& scenario);

/// Runs the configured methods. Solver failures are recorded per run.
RunReport execute(const RunConfig& cfg);

/// Writes trajectories.csv, residuals.csv, summary.csv and report.txt.
void write_outputs(const RunReport& report, const std::string& dir);

/// Writes plot-ready CSVs: obstacles, terrain height grid and per-iteration
/// trajectory overlays.
void emit_plot_data(const RunReport& report, const std::string& dir);

/// execute + write_outputs (+ emit_plot_data into dir/plot when enabled).
RunReport run(const RunConfig& cfg);

/// Fixed 12-significant-digit float formatting used in every output file.
std::string format_number(double v);

}  // namespace osscp
