#include "osscp/scp.hpp"

#include "osscp/parallel.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <limits>

namespace osscp {

void ScpConfig::validate() const {
  weights.validate(true);
  if (!(eps_c > 0)) throw std::invalid_argument("eps_c must be positive");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
  if (!(qp.tol > 0)) throw std::invalid_argument("subproblem tol must be positive");
}

ScpRunRecord scp_solve(const ProblemDefinition& problem, const Trajectory& guess, const ScpConfig& cfg) {
  cfg.validate();
  problem.validate();
  problem.require_matches(guess);
  const auto start = std::chrono::steady_clock::now();
  const SubproblemLayout layout{problem.dims, cfg.weights.inequality};

  ScpRunRecord rec;
  rec.iterates.push_back(guess);
  rec.costs.push_back(true_penalized_cost(problem, cfg.weights, guess).total);

  for (int j = 1; j <= cfg.max_iters; ++j) {
    const Trajectory& current = rec.iterates.back();
    const LinearizedProblem lin = linearize(problem, current);
    const SubproblemSolution sol = solve_subproblem(build_scp_qp(lin, cfg.weights, current), layout, cfg.qp);
    if (sol.status == QpStatus::infeasible) {
      throw ScpError(fmt::format("SCP subproblem infeasible at iteration {}", j), j);
    }
    if (sol.status != QpStatus::solved) {
      spdlog::warn("SCP iteration {}: subproblem stopped with status {}", j, to_string(sol.status));
    }
    rec.statuses.push_back(sol.status);
    rec.iterates.push_back(sol.z);
    rec.costs.push_back(true_penalized_cost(problem, cfg.weights, sol.z).total);
    rec.iterations = j;
    const double change = std::abs(rec.costs[j] - rec.costs[j - 1]);
    spdlog::debug("SCP iteration {}: cost {:.10g}, change {:.3g}", j, rec.costs[j], change);
    if (change <= cfg.eps_c) {
      rec.converged = true;
      break;
    }
  }
  rec.final_cost = rec.costs.back();
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

std::vector<ScpRunRecord> multi_start(const ProblemDefinition& problem,
                                      const std::vector<Trajectory>& guesses, const ScpConfig& cfg,
                                      int threads) {
  if (guesses.empty()) throw std::invalid_argument("multi_start needs at least one guess");
  cfg.validate();
  std::vector<ScpRunRecord> records(guesses.size());
  parallel_for(static_cast<int>(guesses.size()), threads, [&](int i) {
    try {
      records[i] = scp_solve(problem, guesses[i], cfg);
    } catch (const std::exception& e) {
      records[i] = ScpRunRecord{};
      records[i].iterates.push_back(guesses[i]);
      records[i].error = e.what();
      records[i].final_cost = std::numeric_limits<double>::quiet_NaN();
      spdlog::error("SCP run {} failed: {}", i, e.what());
    }
  });
  return records;
}

}  // namespace osscp
