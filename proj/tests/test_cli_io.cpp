#include "osscp/cli_io.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace osscp;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("osscp_cli_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("a minimal config takes the defaults") {
  const RunConfig cfg = parse_config(R"({"scenario": "unicycle-terrain"})");
  CHECK(cfg.scenario == "unicycle-terrain");
  CHECK(cfg.method == "both");
  CHECK(cfg.guesses.empty());
  CHECK(cfg.output_dir == "out");
  CHECK(cfg.plot_data);
  CHECK(cfg.solver == SolverOverrides{});
  CHECK(parse_config("{}") == RunConfig{});
}

TEST_CASE("unknown keys are named in the error") {
  CHECK(error_of(R"({"scenario": "unicycle-basic", "colour": 1})").find("'colour'") != std::string::npos);
  CHECK(error_of(R"({"solver": {"rhoo": 1}})").find("'solver.rhoo'") != std::string::npos);
  CHECK(error_of(R"({"scenario_overrides": {"speed": 1}})").find("scenario_overrides.speed") != std::string::npos);
  CHECK(error_of(R"({"guesses": [{"name": "a", "shape": 1}]})").find("guesses[0].shape") != std::string::npos);
}

TEST_CASE("syntax errors report line and column") {
  const std::string msg = error_of("{\n  \"scenario\": ,\n}");
  CHECK(msg.find("line 2") != std::string::npos);
  CHECK(msg.find("column 15") != std::string::npos);
}

TEST_CASE("invalid values are rejected") {
  CHECK_FALSE(error_of(R"({"scenario": "mars"})").empty());
  CHECK_FALSE(error_of(R"({"method": "fast"})").empty());
  CHECK_FALSE(error_of(R"({"guesses": ["over", "over"]})").empty());
  CHECK_FALSE(error_of(R"({"guesses": [{"name": "x", "kind": "loop"}]})").empty());
  CHECK_FALSE(error_of(R"({"solver": {"threads": 1.5}})").empty());
  CHECK_FALSE(error_of(R"({"solver": {"rho": "big"}})").empty());
  CHECK_FALSE(error_of(R"({"solver": {"inequality_penalty": "square"}})").empty());
  CHECK_FALSE(error_of(R"({"seed": -3})").empty());
  CHECK_FALSE(error_of(R"({"output_dir": ""})").empty());
  CHECK_FALSE(error_of(R"([1, 2])").empty());
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("configs round-trip through JSON") {
  const std::string text = R"({
    "scenario": "unicycle-basic",
    "method": "osscp",
    "guesses": ["over", {"name": "mine", "kind": "waypoints", "waypoints": [[2, 3], [6, -4]]},
                {"name": "low", "kind": "lower-corridor", "offset": -1.2}],
    "scenario_overrides": {"K": 30, "dt": 0.3},
    "solver": {"rho": 4.5, "threads": 2, "stop_on_stagnation": true, "consensus_mask": [true, true, false, false]},
    "output_dir": "somewhere",
    "seed": 17,
    "plot_data": false
  })";
  const RunConfig cfg = parse_config(text);
  CHECK(cfg.guesses.size() == 3);
  CHECK(cfg.guesses[1].waypoints.size() == 2);
  CHECK(cfg.solver.rho == 4.5);
  CHECK(parse_config(write_config(cfg)) == cfg);
  for (const auto& name : scenario_names()) {
    const RunConfig d = default_config(name);
    CHECK(parse_config(write_config(d)) == d);
  }
}

TEST_CASE("default config reproduces the built-in scenario") {
  for (const auto& name : scenario_names()) {
    const RunConfig d = default_config(name);
    const Scenario a = build_scenario(name);
    const Scenario b = resolve_scenario(d);
    CHECK(b.params.K == a.params.K);
    CHECK(b.params.dt == a.params.dt);
    CHECK(b.scp.weights == a.scp.weights);
    CHECK(b.osscp.rho == a.osscp.rho);
    CHECK(b.osscp.max_iters == a.osscp.max_iters);
    REQUIRE(b.guesses.size() == a.guesses.size());
    for (std::size_t i = 0; i < a.guesses.size(); ++i) CHECK(b.guesses[i].offset == a.guesses[i].offset);
  }
}

TEST_CASE("guess resolution") {
  RunConfig cfg;
  cfg.guesses = {GuessEntry{"straight", {}, {}, {}}, GuessEntry{"lower-corridor", {}, {}, {}},
                 GuessEntry{"wide", std::string("over"), 6.0, {}},
                 GuessEntry{"path", {}, {}, {Eigen::Vector2d(5, 5)}}};
  const Scenario s = resolve_scenario(cfg);
  const auto specs = resolve_guesses(cfg, s);
  REQUIRE(specs.size() == 4);
  CHECK(specs[0].kind == GuessKind::straight);
  CHECK(specs[1].kind == GuessKind::lower_corridor);
  CHECK(specs[1].offset == s.lower_corridor_guess.offset);
  CHECK(specs[2].kind == GuessKind::over);
  CHECK(specs[2].offset == 6.0);
  CHECK(specs[3].kind == GuessKind::waypoints);
  cfg.guesses = {GuessEntry{"mystery", {}, {}, {}}};
  CHECK_THROWS_AS(resolve_guesses(cfg, s), ConfigError);
  cfg.guesses = {};
  CHECK(resolve_guesses(cfg, s).size() == s.guesses.size());
}

TEST_CASE("solver overrides reach both engines") {
  RunConfig cfg;
  cfg.solver.w1 = 50.0;
  cfg.solver.rho = 8.0;
  cfg.solver.eps_c = 1e-5;
  cfg.solver.qp_max_iters = 999;
  cfg.solver.inequality_penalty = "absolute";
  cfg.solver.consensus_mask = std::vector<bool>{true, true, false, false};
  const Scenario s = resolve_scenario(cfg);
  CHECK(s.scp.weights.w1 == 50.0);
  CHECK(s.osscp.weights.w1 == 50.0);
  CHECK(s.osscp.rho == 8.0);
  CHECK(s.scp.eps_c == 1e-5);
  CHECK(s.osscp.qp.max_iterations == 999);
  CHECK(s.scp.weights.inequality == InequalityPenalty::absolute);
  CHECK(s.osscp.mask.size() == 4);
  cfg.solver.consensus_mask = std::vector<bool>{true};
  CHECK_THROWS_AS(resolve_scenario(cfg), ConfigError);
  cfg.solver.consensus_mask.reset();
  cfg.solver.rho = -1.0;
  CHECK_THROWS_AS(resolve_scenario(cfg), ConfigError);
}

TEST_CASE("outputs are deterministic and consistent with the solutions") {
  RunConfig cfg = default_config("unicycle-basic");
  const fs::path d1 = scratch("a"), d2 = scratch("b");
  cfg.output_dir = d1.string();
  const RunReport r1 = run(cfg);
  cfg.output_dir = d2.string();
  cfg.solver.threads = 1;
  const RunReport r2 = run(cfg);

  for (const char* f : {"trajectories.csv", "residuals.csv", "summary.csv", "plot/obstacles.csv",
                        "plot/overlay_osscp.csv", "plot/overlay_scp-over.csv"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(d1 / f));
    CHECK(slurp(d1 / f) == slurp(d2 / f));
  }
  CHECK(fs::exists(d1 / "report.txt"));
  CHECK_FALSE(fs::exists(d1 / "plot/terrain_grid.csv"));

  // Recompute each summary cost from the written final iterate.
  const auto traj = read_csv(d1 / "trajectories.csv");
  REQUIRE(traj.front() == std::vector<std::string>{"run_id", "agent_id", "iter", "k", "t", "x", "y", "theta", "u"});
  const auto summary = read_csv(d1 / "summary.csv");
  REQUIRE(summary.front() == std::vector<std::string>{"method", "guess", "cost", "iterations", "converged"});
  const int K = r1.scenario.params.K;
  int checked = 0;
  for (std::size_t i = 1; i < summary.size(); ++i) {
    const auto& row = summary[i];
    if (row[0] == "best-scp-vs-osscp") continue;
    const std::string run_id = row[0] == "scp" ? "scp-" + row[1] : "osscp";
    const std::string agent = row[0] == "scp" ? "0" : "-1";
    const std::string iter = row[3];
    Eigen::MatrixXd pts(4, K + 1);
    int found = 0;
    for (const auto& t : traj) {
      if (t[0] == run_id && t[1] == agent && t[2] == iter) {
        const int k = std::stoi(t[3]);
        for (int j = 0; j < 4; ++j) pts(j, k) = std::stod(t[5 + j]);
        ++found;
      }
    }
    REQUIRE(found == K + 1);
    const double recomputed = true_penalized_cost(r1.scenario.problem, r1.scenario.scp.weights, Trajectory(3, 1, pts)).total;
    // Coordinates carry 12 significant digits; with w1 = 100 over 120 defect
    // entries the rounding moves the cost by at most about 1e-7.
    CHECK(std::stod(row[2]) == doctest::Approx(recomputed).epsilon(1e-6));
    // The in-memory solution reproduces the reported cost exactly.
    const RunEntry& entry = r1.rows[i - 1];
    CHECK(true_penalized_cost(r1.scenario.problem, r1.scenario.scp.weights, entry.solution).total == entry.cost);
    ++checked;
  }
  CHECK(checked == 4);

  // Residual rows: one per agent per iteration.
  const auto res = read_csv(d1 / "residuals.csv");
  REQUIRE(r1.osscp.has_value());
  CHECK(res.size() == 1 + 3 * static_cast<std::size_t>(r1.osscp->iterations));
  // Overlays hold iterations + 1 snapshots.
  const auto overlay = read_csv(d1 / "plot/overlay_osscp.csv");
  CHECK(overlay.size() == 1 + static_cast<std::size_t>((r1.osscp->iterations + 1) * (K + 1)));
  CHECK(r1.exit_code() == 0);
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("non-converged runs give exit code 2") {
  RunConfig cfg = default_config("unicycle-basic");
  cfg.method = "osscp";
  cfg.solver.osscp_max_iters = 2;
  cfg.plot_data = false;
  const fs::path dir = scratch("c");
  cfg.output_dir = dir.string();
  const RunReport r = run(cfg);
  CHECK(r.rows.size() == 1);
  CHECK_FALSE(r.rows[0].converged);
  CHECK(r.exit_code() == 2);
  CHECK_FALSE(fs::exists(dir / "plot"));
  const auto summary = read_csv(dir / "summary.csv");
  CHECK(summary.size() == 2);
  fs::remove_all(dir);
}

TEST_CASE("terrain scenario writes a height grid") {
  RunConfig cfg = default_config("unicycle-terrain");
  cfg.method = "scp";
  cfg.guesses = {GuessEntry{"straight", {}, {}, {}}};
  const fs::path dir = scratch("d");
  cfg.output_dir = dir.string();
  run(cfg);
  const auto grid = read_csv(dir / "plot/terrain_grid.csv");
  REQUIRE(grid.size() > 1);
  CHECK(grid.front() == std::vector<std::string>{"x", "y", "value"});
  const Scenario s = build_scenario("unicycle-terrain");
  for (std::size_t i = 1; i < grid.size(); i += 97) {
    const Eigen::Vector2d p(std::stod(grid[i][0]), std::stod(grid[i][1]));
    CHECK(std::stod(grid[i][2]) == doctest::Approx(s.terrain.value(p)).epsilon(1e-10));
  }
  fs::remove_all(dir);
}

TEST_CASE("number formatting") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0 / 3.0) == "0.333333333333");
  CHECK(format_number(-2.5e-10) == "-2.5e-10");
  CHECK(format_number(std::nan("")) == "nan");
}
