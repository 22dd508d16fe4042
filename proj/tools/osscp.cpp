#include "osscp/cli_io.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/cfg/env.h>
#include <spdlog/spdlog.h>

#include <iostream>

namespace {

int solve(const std::string& config_path, const std::string& method, const std::string& out_dir) {
  osscp::RunConfig cfg = osscp::load_config(config_path);
  if (!method.empty()) cfg.method = method;
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  cfg.validate();
  const osscp::RunReport report = osscp::run(cfg);
  for (const auto& r : report.rows) {
    std::cout << fmt::format("{:<6} {:<28} cost {:>18} iters {:>4} {}{}\n", r.method, r.guess,
                             osscp::format_number(r.cost), r.iterations, r.converged ? "converged" : "NOT converged",
                             r.error.empty() ? "" : " (" + r.error + ")");
  }
  std::cout << "outputs written to " << cfg.output_dir << "\n";
  return report.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  spdlog::cfg::load_env_levels();

  CLI::App app{"Multi-start SCP and operator-splitting SCP trajectory optimizer"};
  app.require_subcommand(1);

  std::string config_path, method, out_dir;
  auto* solve_cmd = app.add_subcommand("solve", "Run the configured solvers and write CSV outputs");
  solve_cmd->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("--method", method, "Override the configured method")
      ->check(CLI::IsMember({"scp", "osscp", "both"}));
  solve_cmd->add_option("--out", out_dir, "Override the output directory");

  auto* scenarios_cmd = app.add_subcommand("scenarios", "Scenario catalogue");
  scenarios_cmd->require_subcommand(1);
  auto* list_cmd = scenarios_cmd->add_subcommand("list", "List scenario names");

  std::string scenario;
  auto* config_cmd = app.add_subcommand("config", "Configuration helpers");
  config_cmd->require_subcommand(1);
  auto* defaults_cmd = config_cmd->add_subcommand("print-defaults", "Print the full default config of a scenario");
  defaults_cmd->add_option("scenario", scenario, "Scenario name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*solve_cmd) return solve(config_path, method, out_dir);
    if (*list_cmd) {
      for (const auto& name : osscp::scenario_names()) std::cout << name << "\n";
      return 0;
    }
    if (*defaults_cmd) {
      std::cout << osscp::write_config(osscp::default_config(scenario));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
