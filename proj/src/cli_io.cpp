#include "osscp/cli_io.hpp"

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace osscp {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

const std::vector<std::string> kMethods = {"scp", "osscp", "both"};

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

void require_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) fail(fmt::format("unknown key '{}{}'", where, key));
  }
}

const json& require_object(const json& j, const std::string& key) {
  if (!j.is_object()) fail(fmt::format("'{}' must be an object", key));
  return j;
}

std::string get_string(const json& j, const std::string& key) {
  if (!j.is_string()) fail(fmt::format("'{}' must be a string", key));
  return j.get<std::string>();
}

double get_number(const json& j, const std::string& key) {
  if (!j.is_number()) fail(fmt::format("'{}' must be a number", key));
  return j.get<double>();
}

int get_int(const json& j, const std::string& key) {
  if (!j.is_number_integer()) fail(fmt::format("'{}' must be an integer", key));
  const auto v = j.get<std::int64_t>();
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    fail(fmt::format("'{}' is out of range", key));
  }
  return static_cast<int>(v);
}

bool get_bool(const json& j, const std::string& key) {
  if (!j.is_boolean()) fail(fmt::format("'{}' must be a boolean", key));
  return j.get<bool>();
}

GuessEntry parse_guess(const json& j, std::size_t index) {
  const std::string where = fmt::format("guesses[{}]", index);
  GuessEntry g;
  if (j.is_string()) {
    g.name = j.get<std::string>();
    return g;
  }
  require_object(j, where);
  require_keys(j, where + ".", {"name", "kind", "offset", "waypoints"});
  if (!j.contains("name")) fail(fmt::format("'{}.name' is required", where));
  g.name = get_string(j.at("name"), where + ".name");
  if (j.contains("kind")) g.kind = get_string(j.at("kind"), where + ".kind");
  if (j.contains("offset")) g.offset = get_number(j.at("offset"), where + ".offset");
  if (j.contains("waypoints")) {
    const json& w = j.at("waypoints");
    if (!w.is_array()) fail(fmt::format("'{}.waypoints' must be an array of [x, y] pairs", where));
    for (std::size_t i = 0; i < w.size(); ++i) {
      const std::string key = fmt::format("{}.waypoints[{}]", where, i);
      if (!w[i].is_array() || w[i].size() != 2) fail(fmt::format("'{}' must be an [x, y] pair", key));
      g.waypoints.emplace_back(get_number(w[i][0], key), get_number(w[i][1], key));
    }
  }
  return g;
}

json guess_to_json(const GuessEntry& g) {
  if (!g.kind && !g.offset && g.waypoints.empty()) return g.name;
  json j = {{"name", g.name}};
  if (g.kind) j["kind"] = *g.kind;
  if (g.offset) j["offset"] = *g.offset;
  if (!g.waypoints.empty()) {
    json w = json::array();
    for (const auto& p : g.waypoints) w.push_back({p.x(), p.y()});
    j["waypoints"] = w;
  }
  return j;
}

SolverOverrides parse_solver(const json& j) {
  require_object(j, "solver");
  require_keys(j, "solver.",
               {"w1", "w2", "w3", "wp", "rho", "eps_c", "eps_r", "eps_s", "qp_tol", "scp_max_iters",
                "osscp_max_iters", "qp_max_iters", "threads", "inequality_penalty", "stop_on_stagnation",
                "consensus_mask"});
  SolverOverrides s;
  auto num = [&](const char* key, std::optional<double>& out) {
    if (j.contains(key)) out = get_number(j.at(key), std::string("solver.") + key);
  };
  auto integer = [&](const char* key, std::optional<int>& out) {
    if (j.contains(key)) out = get_int(j.at(key), std::string("solver.") + key);
  };
  num("w1", s.w1);
  num("w2", s.w2);
  num("w3", s.w3);
  num("wp", s.wp);
  num("rho", s.rho);
  num("eps_c", s.eps_c);
  num("eps_r", s.eps_r);
  num("eps_s", s.eps_s);
  num("qp_tol", s.qp_tol);
  integer("scp_max_iters", s.scp_max_iters);
  integer("osscp_max_iters", s.osscp_max_iters);
  integer("qp_max_iters", s.qp_max_iters);
  integer("threads", s.threads);
  if (j.contains("inequality_penalty")) {
    s.inequality_penalty = get_string(j.at("inequality_penalty"), "solver.inequality_penalty");
  }
  if (j.contains("stop_on_stagnation")) {
    s.stop_on_stagnation = get_bool(j.at("stop_on_stagnation"), "solver.stop_on_stagnation");
  }
  if (j.contains("consensus_mask")) {
    const json& m = j.at("consensus_mask");
    if (!m.is_array()) fail("'solver.consensus_mask' must be an array of booleans");
    std::vector<bool> mask;
    for (std::size_t i = 0; i < m.size(); ++i) {
      mask.push_back(get_bool(m[i], fmt::format("solver.consensus_mask[{}]", i)));
    }
    s.consensus_mask = mask;
  }
  return s;
}

json solver_to_json(const SolverOverrides& s) {
  json j = json::object();
  auto put = [&](const char* key, const auto& opt) {
    if (opt) j[key] = *opt;
  };
  put("w1", s.w1);
  put("w2", s.w2);
  put("w3", s.w3);
  put("wp", s.wp);
  put("rho", s.rho);
  put("eps_c", s.eps_c);
  put("eps_r", s.eps_r);
  put("eps_s", s.eps_s);
  put("qp_tol", s.qp_tol);
  put("scp_max_iters", s.scp_max_iters);
  put("osscp_max_iters", s.osscp_max_iters);
  put("qp_max_iters", s.qp_max_iters);
  put("threads", s.threads);
  put("inequality_penalty", s.inequality_penalty);
  put("stop_on_stagnation", s.stop_on_stagnation);
  if (s.consensus_mask) {
    json m = json::array();
    for (bool b : *s.consensus_mask) m.push_back(b);
    j["consensus_mask"] = m;
  }
  return j;
}

std::pair<int, int> line_and_column(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte > 0 ? byte - 1 : 0, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

void apply_solver(const SolverOverrides& o, Scenario& s) {
  auto weights = [&](PenaltyWeights& w) {
    if (o.w1) w.w1 = *o.w1;
    if (o.w2) w.w2 = *o.w2;
    if (o.w3) w.w3 = *o.w3;
    if (o.wp) w.wp = *o.wp;
    if (o.inequality_penalty) w.inequality = inequality_penalty_from_string(*o.inequality_penalty);
  };
  weights(s.scp.weights);
  weights(s.osscp.weights);
  if (o.rho) s.osscp.rho = *o.rho;
  if (o.eps_c) {
    s.scp.eps_c = *o.eps_c;
    s.osscp.eps_c = *o.eps_c;
  }
  if (o.eps_r) s.osscp.eps_r = *o.eps_r;
  if (o.eps_s) s.osscp.eps_s = *o.eps_s;
  if (o.qp_tol) {
    s.scp.qp.tol = *o.qp_tol;
    s.osscp.qp.tol = *o.qp_tol;
  }
  if (o.qp_max_iters) {
    s.scp.qp.max_iterations = *o.qp_max_iters;
    s.osscp.qp.max_iterations = *o.qp_max_iters;
  }
  if (o.scp_max_iters) s.scp.max_iters = *o.scp_max_iters;
  if (o.osscp_max_iters) s.osscp.max_iters = *o.osscp_max_iters;
  if (o.threads) s.osscp.threads = *o.threads;
  if (o.stop_on_stagnation) s.osscp.stop_on_stagnation = *o.stop_on_stagnation;
  if (o.consensus_mask) s.osscp.mask = *o.consensus_mask;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  return out;
}

void close_output(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw std::runtime_error(fmt::format("failed writing '{}'", path.string()));
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw std::runtime_error(fmt::format("cannot create output directory '{}'", dir.string()));
  }
}

void write_trajectory_rows(std::ostream& out, const std::string& run_id, int agent, int iter, const Trajectory& z,
                           double dt) {
  for (int k = 0; k <= z.K(); ++k) {
    const auto p = z.points().col(k);
    out << run_id << ',' << agent << ',' << iter << ',' << k << ',' << format_number(k * dt) << ','
        << format_number(p[0]) << ',' << format_number(p[1]) << ',' << format_number(p[2]) << ','
        << format_number(p[3]) << '\n';
  }
}

std::string scp_run_id(const std::string& guess) { return "scp-" + guess; }

// Index of the lowest-cost converged SCP run, or of the lowest-cost run.
std::optional<std::size_t> best_scp(const RunReport& r) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    if (row.method != "scp" || !row.error.empty()) continue;
    if (!best || row.cost < r.rows[*best].cost) best = i;
  }
  return best;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace

std::string format_number(double v) { return fmt::format("{:.12g}", v); }

void RunConfig::validate() const {
  const auto names = scenario_names();
  if (std::find(names.begin(), names.end(), scenario) == names.end()) {
    fail(fmt::format("'scenario': unknown scenario '{}'", scenario));
  }
  if (std::find(kMethods.begin(), kMethods.end(), method) == kMethods.end()) {
    fail(fmt::format("'method': expected scp, osscp or both, got '{}'", method));
  }
  const auto keys = scenario_override_keys();
  for (const auto& [key, value] : scenario_overrides) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      fail(fmt::format("unknown key 'scenario_overrides.{}'", key));
    }
  }
  std::set<std::string> seen;
  for (const auto& g : guesses) {
    if (g.name.empty()) fail("'guesses': every guess needs a name");
    if (g.name.find_first_of(",\n\" ") != std::string::npos) {
      fail(fmt::format("'guesses': name '{}' may not contain commas, quotes or spaces", g.name));
    }
    if (!seen.insert(g.name).second) fail(fmt::format("'guesses': duplicate name '{}'", g.name));
    if (g.kind) {
      try {
        guess_kind_from_string(*g.kind);
      } catch (const std::invalid_argument& e) {
        fail(fmt::format("'guesses.{}.kind': {}", g.name, e.what()));
      }
    }
  }
  if (output_dir.empty()) fail("'output_dir' must not be empty");
  if (solver.inequality_penalty) {
    try {
      inequality_penalty_from_string(*solver.inequality_penalty);
    } catch (const std::invalid_argument& e) {
      fail(fmt::format("'solver.inequality_penalty': {}", e.what()));
    }
  }
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_and_column(text, e.byte);
    fail(fmt::format("config parse error at line {}, column {}: {}", line, col, e.what()));
  }
  require_object(j, "config");
  require_keys(j, "", {"scenario", "method", "guesses", "scenario_overrides", "solver", "output_dir", "seed",
                       "plot_data"});
  RunConfig cfg;
  if (j.contains("scenario")) cfg.scenario = get_string(j.at("scenario"), "scenario");
  if (j.contains("method")) cfg.method = get_string(j.at("method"), "method");
  if (j.contains("guesses")) {
    const json& g = j.at("guesses");
    if (!g.is_array()) fail("'guesses' must be an array");
    for (std::size_t i = 0; i < g.size(); ++i) cfg.guesses.push_back(parse_guess(g[i], i));
  }
  if (j.contains("scenario_overrides")) {
    const json& o = require_object(j.at("scenario_overrides"), "scenario_overrides");
    for (const auto& [key, value] : o.items()) {
      cfg.scenario_overrides[key] = get_number(value, "scenario_overrides." + key);
    }
  }
  if (j.contains("solver")) cfg.solver = parse_solver(j.at("solver"));
  if (j.contains("output_dir")) cfg.output_dir = get_string(j.at("output_dir"), "output_dir");
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) fail("'seed' must be a nonnegative integer");
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("plot_data")) cfg.plot_data = get_bool(j.at("plot_data"), "plot_data");
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(fmt::format("cannot open config '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string write_config(const RunConfig& cfg) {
  json j;
  j["scenario"] = cfg.scenario;
  j["method"] = cfg.method;
  j["guesses"] = json::array();
  for (const auto& g : cfg.guesses) j["guesses"].push_back(guess_to_json(g));
  j["scenario_overrides"] = json::object();
  for (const auto& [k, v] : cfg.scenario_overrides) j["scenario_overrides"][k] = v;
  j["solver"] = solver_to_json(cfg.solver);
  j["output_dir"] = cfg.output_dir;
  j["seed"] = cfg.seed;
  j["plot_data"] = cfg.plot_data;
  return j.dump(2) + "\n";
}

RunConfig default_config(const std::string& scenario) {
  const Scenario s = build_scenario(scenario);
  RunConfig cfg;
  cfg.scenario = scenario;
  for (const auto& g : s.guesses) cfg.guesses.push_back(GuessEntry{g.name, {}, {}, {}});
  const UnicycleParams& p = s.params;
  cfg.scenario_overrides = {{"v", p.v},
                            {"dt", p.dt},
                            {"K", p.K},
                            {"q", p.q},
                            {"u_max", p.u_max},
                            {"start_x", p.start.x()},
                            {"start_y", p.start.y()},
                            {"start_theta", p.start.z()},
                            {"goal_x", p.goal.x()},
                            {"goal_y", p.goal.y()},
                            {"lower_offset", s.lower_corridor_guess.offset}};
  for (const auto& g : s.guesses) {
    if (g.kind == GuessKind::over) cfg.scenario_overrides["over_offset"] = g.offset;
    if (g.kind == GuessKind::under) cfg.scenario_overrides["under_offset"] = g.offset;
  }
  if (!s.terrain.empty()) {
    cfg.scenario_overrides["terrain_amplitude"] = std::abs(s.terrain.components().front().amplitude);
  }
  SolverOverrides& o = cfg.solver;
  o.w1 = s.scp.weights.w1;
  o.w2 = s.scp.weights.w2;
  o.w3 = s.scp.weights.w3;
  o.wp = s.scp.weights.wp;
  o.inequality_penalty = to_string(s.scp.weights.inequality);
  o.rho = s.osscp.rho;
  o.eps_c = s.scp.eps_c;
  o.eps_r = s.osscp.eps_r;
  o.eps_s = s.osscp.eps_s;
  o.qp_tol = s.scp.qp.tol;
  o.qp_max_iters = s.scp.qp.max_iterations;
  o.scp_max_iters = s.scp.max_iters;
  o.osscp_max_iters = s.osscp.max_iters;
  o.threads = s.osscp.threads;
  o.stop_on_stagnation = s.osscp.stop_on_stagnation;
  return cfg;
}

Scenario resolve_scenario(const RunConfig& cfg) {
  cfg.validate();
  Scenario s;
  try {
    s = build_scenario(cfg.scenario, cfg.scenario_overrides);
    apply_solver(cfg.solver, s);
    s.scp.validate();
    s.osscp.validate();
    mask_weights(s.osscp.mask, s.problem.dims);
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  return s;
}

std::vector<GuessSpec> resolve_guesses(const RunConfig& cfg, const Scenario& scenario) {
  if (cfg.guesses.empty()) return scenario.guesses;
  std::vector<GuessSpec> specs;
  for (const auto& g : cfg.guesses) {
    GuessSpec spec;
    if (!g.kind) {
      auto it = std::find_if(scenario.guesses.begin(), scenario.guesses.end(),
                             [&](const GuessSpec& s) { return s.name == g.name; });
      if (it != scenario.guesses.end()) {
        spec = *it;
      } else if (g.name == scenario.lower_corridor_guess.name) {
        spec = scenario.lower_corridor_guess;
      } else if (!g.waypoints.empty()) {
        spec.kind = GuessKind::waypoints;
      } else {
        fail(fmt::format("'guesses': '{}' is not a scenario guess; give a kind or waypoints", g.name));
      }
    } else {
      spec.kind = guess_kind_from_string(*g.kind);
      if (spec.kind == GuessKind::lower_corridor) spec.offset = scenario.lower_corridor_guess.offset;
      for (const auto& d : scenario.guesses) {
        if (d.kind == spec.kind) spec.offset = d.offset;
      }
    }
    spec.name = g.name;
    if (g.offset) spec.offset = *g.offset;
    if (!g.waypoints.empty()) spec.waypoints = g.waypoints;
    if (spec.kind == GuessKind::waypoints && spec.waypoints.empty()) {
      fail(fmt::format("'guesses': '{}' needs waypoints", g.name));
    }
    specs.push_back(spec);
  }
  return specs;
}

int RunReport::exit_code() const {
  for (const auto& r : rows) {
    if (!r.converged || !r.error.empty()) return 2;
  }
  return 0;
}

RunReport execute(const RunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.config = cfg;
  report.scenario = resolve_scenario(cfg);
  const Scenario& s = report.scenario;
  for (const auto& spec : resolve_guesses(cfg, s)) {
    report.guess_names.push_back(spec.name);
    report.guesses.push_back(make_guess(spec, s.params));
  }

  if (cfg.method == "scp" || cfg.method == "both") {
    report.scp = multi_start(s.problem, report.guesses, s.scp, s.osscp.threads);
    for (std::size_t i = 0; i < report.scp.size(); ++i) {
      const ScpRunRecord& rec = report.scp[i];
      RunEntry row;
      row.method = "scp";
      row.guess = report.guess_names[i];
      row.iterations = rec.iterations;
      row.converged = rec.converged && rec.error.empty();
      row.wall_time = rec.wall_time;
      row.error = rec.error;
      row.solution = rec.solution();
      row.cost = rec.error.empty() ? true_penalized_cost(s.problem, s.scp.weights, row.solution).total
                                   : std::numeric_limits<double>::quiet_NaN();
      report.rows.push_back(row);
    }
  }
  if (cfg.method == "osscp" || cfg.method == "both") {
    RunEntry row;
    row.method = "osscp";
    for (std::size_t i = 0; i < report.guess_names.size(); ++i) {
      row.guess += (i ? "+" : "") + report.guess_names[i];
    }
    try {
      report.osscp = osscp_solve(s.problem, report.guesses, s.osscp);
      row.iterations = report.osscp->iterations;
      row.converged = report.osscp->converged;
      row.wall_time = report.osscp->wall_time;
      row.solution = report.osscp->zbar;
      row.cost = true_penalized_cost(s.problem, s.osscp.weights, row.solution).total;
    } catch (const std::exception& e) {
      report.osscp_error = e.what();
      row.error = e.what();
      row.cost = std::numeric_limits<double>::quiet_NaN();
      spdlog::error("OS-SCP failed: {}", e.what());
    }
    report.rows.push_back(row);
  }
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void write_outputs(const RunReport& report, const std::string& dir_str) {
  const fs::path dir(dir_str);
  ensure_directory(dir);
  const double dt = report.scenario.params.dt;

  {
    const fs::path path = dir / "trajectories.csv";
    auto out = open_output(path);
    out << "run_id,agent_id,iter,k,t,x,y,theta,u\n";
    for (std::size_t i = 0; i < report.scp.size(); ++i) {
      const auto& rec = report.scp[i];
      for (std::size_t it = 0; it < rec.iterates.size(); ++it) {
        write_trajectory_rows(out, scp_run_id(report.guess_names[i]), 0, static_cast<int>(it), rec.iterates[it], dt);
      }
    }
    if (report.osscp) {
      const auto& o = *report.osscp;
      write_trajectory_rows(out, "osscp", -1, 0, o.initial_zbar, dt);
      for (const auto& agent : o.agent_history.front()) write_trajectory_rows(out, "osscp", agent.id, 0, agent.z, dt);
      for (std::size_t j = 0; j < o.history.size(); ++j) {
        const int iter = o.history[j].iteration;
        write_trajectory_rows(out, "osscp", -1, iter, o.history[j].zbar, dt);
        for (const auto& agent : o.agent_history[j + 1]) write_trajectory_rows(out, "osscp", agent.id, iter, agent.z, dt);
      }
    }
    close_output(out, path);
  }
  {
    const fs::path path = dir / "residuals.csv";
    auto out = open_output(path);
    out << "iter,agent_id,primal_norm,dual_norm\n";
    if (report.osscp) {
      for (const auto& h : report.osscp->history) {
        for (std::size_t a = 0; a < h.primal_norms.size(); ++a) {
          out << h.iteration << ',' << a << ',' << format_number(h.primal_norms[a]) << ','
              << format_number(h.dual_norm) << '\n';
        }
      }
    }
    close_output(out, path);
  }
  {
    const fs::path path = dir / "summary.csv";
    auto out = open_output(path);
    out << "method,guess,cost,iterations,converged\n";
    for (const auto& r : report.rows) {
      out << r.method << ',' << r.guess << ',' << format_number(r.cost) << ',' << r.iterations << ','
          << (r.converged ? "true" : "false") << '\n';
    }
    const auto best = best_scp(report);
    if (report.config.method == "both" && best && report.osscp) {
      const RunEntry& b = report.rows[*best];
      const RunEntry& o = report.rows.back();
      out << "best-scp-vs-osscp," << b.guess << ',' << format_number(o.cost - b.cost) << ',' << o.iterations << ','
          << (b.converged && o.converged ? "true" : "false") << '\n';
    }
    close_output(out, path);
  }
  {
    const fs::path path = dir / "report.txt";
    auto out = open_output(path);
    out << "Scenario: " << report.scenario.name << "\n";
    out << "Method: " << report.config.method << "\n\n";
    const std::vector<std::size_t> w = {8, 28, 20, 11, 10, 10};
    out << pad("Method", w[0]) << pad("Guess", w[1]) << pad("Cost", w[2]) << pad("Iterations", w[3])
        << pad("Converged", w[4]) << "Time (s)\n";
    out << std::string(w[0] + w[1] + w[2] + w[3] + w[4] + w[5], '-') << "\n";
    for (const auto& r : report.rows) {
      out << pad(r.method, w[0]) << pad(r.guess, w[1]) << pad(format_number(r.cost), w[2])
          << pad(std::to_string(r.iterations), w[3]) << pad(r.converged ? "yes" : "no", w[4])
          << fmt::format("{:.3f}", r.wall_time) << "\n";
      if (!r.error.empty()) out << "  error: " << r.error << "\n";
    }
    const auto best = best_scp(report);
    if (best && report.osscp) {
      const RunEntry& b = report.rows[*best];
      const RunEntry& o = report.rows.back();
      out << "\nBest SCP (" << b.guess << ") cost " << format_number(b.cost) << " vs OS-SCP cost "
          << format_number(o.cost) << ", difference " << format_number(o.cost - b.cost) << "\n";
    }
    if (report.osscp) {
      const auto& h = report.osscp->history;
      out << "OS-SCP stop reason: " << report.osscp->stop_reason << "\n";
      if (!h.empty()) {
        const auto& last = h.back();
        out << "Final residuals: primal "
            << format_number(*std::max_element(last.primal_norms.begin(), last.primal_norms.end())) << ", dual "
            << format_number(last.dual_norm) << "\n";
      }
    }
    out << "Total wall time: " << fmt::format("{:.3f}", report.wall_time) << " s\n";

    RunConfig echo = default_config(report.config.scenario);
    echo.method = report.config.method;
    echo.guesses = report.config.guesses.empty() ? echo.guesses : report.config.guesses;
    for (const auto& [k, v] : report.config.scenario_overrides) echo.scenario_overrides[k] = v;
    const SolverOverrides& o = report.config.solver;
    SolverOverrides& e = echo.solver;
    auto merge = [](auto& dst, const auto& src) {
      if (src) dst = src;
    };
    merge(e.w1, o.w1);
    merge(e.w2, o.w2);
    merge(e.w3, o.w3);
    merge(e.wp, o.wp);
    merge(e.rho, o.rho);
    merge(e.eps_c, o.eps_c);
    merge(e.eps_r, o.eps_r);
    merge(e.eps_s, o.eps_s);
    merge(e.qp_tol, o.qp_tol);
    merge(e.scp_max_iters, o.scp_max_iters);
    merge(e.osscp_max_iters, o.osscp_max_iters);
    merge(e.qp_max_iters, o.qp_max_iters);
    merge(e.threads, o.threads);
    merge(e.inequality_penalty, o.inequality_penalty);
    merge(e.stop_on_stagnation, o.stop_on_stagnation);
    merge(e.consensus_mask, o.consensus_mask);
    echo.output_dir = report.config.output_dir;
    echo.seed = report.config.seed;
    echo.plot_data = report.config.plot_data;
    out << "\nParameters:\n" << write_config(echo);
    close_output(out, path);
  }
}

void emit_plot_data(const RunReport& report, const std::string& dir_str) {
  const fs::path dir(dir_str);
  ensure_directory(dir);
  const Scenario& s = report.scenario;
  {
    const fs::path path = dir / "obstacles.csv";
    auto out = open_output(path);
    out << "cx,cy,R\n";
    for (const auto& o : s.obstacles) {
      out << format_number(o.center.x()) << ',' << format_number(o.center.y()) << ',' << format_number(o.radius)
          << '\n';
    }
    close_output(out, path);
  }
  if (!s.terrain.empty()) {
    const fs::path path = dir / "terrain_grid.csv";
    auto out = open_output(path);
    out << "x,y,value\n";
    const double x0 = std::min(s.params.start.x(), s.params.goal.x()) - 1.0;
    const double x1 = std::max(s.params.start.x(), s.params.goal.x()) + 1.0;
    const double y0 = std::min(s.params.start.y(), s.params.goal.y()) - 6.0;
    const double y1 = std::max(s.params.start.y(), s.params.goal.y()) + 6.0;
    const int nx = 61, ny = 61;
    for (int i = 0; i < nx; ++i) {
      for (int j = 0; j < ny; ++j) {
        const Eigen::Vector2d p(x0 + (x1 - x0) * i / (nx - 1), y0 + (y1 - y0) * j / (ny - 1));
        out << format_number(p.x()) << ',' << format_number(p.y()) << ',' << format_number(s.terrain.value(p))
            << '\n';
      }
    }
    close_output(out, path);
  }
  auto overlay = [&](const std::string& name, const std::vector<Trajectory>& iterates) {
    const fs::path path = dir / ("overlay_" + name + ".csv");
    auto out = open_output(path);
    out << "iter,k,x,y\n";
    for (std::size_t it = 0; it < iterates.size(); ++it) {
      for (int k = 0; k <= iterates[it].K(); ++k) {
        out << it << ',' << k << ',' << format_number(iterates[it].points()(0, k)) << ','
            << format_number(iterates[it].points()(1, k)) << '\n';
      }
    }
    close_output(out, path);
  };
  for (std::size_t i = 0; i < report.scp.size(); ++i) overlay(scp_run_id(report.guess_names[i]), report.scp[i].iterates);
  if (report.osscp) {
    std::vector<Trajectory> zbars{report.osscp->initial_zbar};
    for (const auto& h : report.osscp->history) zbars.push_back(h.zbar);
    overlay("osscp", zbars);
  }
}

RunReport run(const RunConfig& cfg) {
  RunReport report = execute(cfg);
  write_outputs(report, cfg.output_dir);
  if (cfg.plot_data) emit_plot_data(report, (fs::path(cfg.output_dir) / "plot").string());
  return report;
}

}  // namespace osscp
