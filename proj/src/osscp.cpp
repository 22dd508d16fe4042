#include "osscp/osscp.hpp"

#include "osscp/parallel.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>

namespace osscp {
namespace {

// 1 on masked entries and 0 elsewhere.
Eigen::VectorXd mask_indicator(const ConsensusMask& mask, const Dims& dims) {
  Eigen::VectorXd w = mask_weights(mask, dims);
  return (w.array() == 1.0).cast<double>();
}

Dims dims_of(const Trajectory& z) { return Dims{z.nx(), z.nu(), z.K(), 0, 0}; }

void require_agents(const std::vector<AgentState>& agents) {
  if (agents.empty()) throw std::invalid_argument("at least one agent is required");
  for (const auto& a : agents) {
    if (!a.z.same_shape(agents.front().z) || !a.dual.same_shape(a.z)) {
      throw DimensionError(fmt::format("agent {} has inconsistent trajectory shapes", a.id));
    }
  }
}

}  // namespace

void OsscpConfig::validate() const {
  weights.validate(true);
  if (!(rho > 0) || !std::isfinite(rho)) throw std::invalid_argument("rho must be positive");
  if (!(eps_r > 0) || !(eps_s > 0) || !(eps_c > 0)) {
    throw std::invalid_argument("eps_r, eps_s and eps_c must be positive");
  }
  if (max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
  if (max_projection_failures < 1) throw std::invalid_argument("max_projection_failures must be at least 1");
  if (!(qp.tol > 0)) throw std::invalid_argument("subproblem tol must be positive");
}

double ResidualNorms::max_primal() const {
  return primal.empty() ? 0.0 : *std::max_element(primal.begin(), primal.end());
}

AgentState primal_update(const ProblemDefinition& problem, const AgentState& agent,
                         const Trajectory& zbar, const OsscpConfig& cfg) {
  const LinearizedProblem lin = linearize(problem, agent.z);
  const QuadraticProgram qp = build_consensus_qp(lin, cfg.rho, zbar, agent.dual, cfg.weights, cfg.mask);
  const SubproblemSolution sol =
      solve_subproblem(qp, SubproblemLayout{problem.dims, cfg.weights.inequality}, cfg.qp);
  if (sol.status == QpStatus::infeasible) {
    throw OsscpError(fmt::format("agent {} subproblem infeasible", agent.id), -1, agent.id);
  }
  if (sol.status != QpStatus::solved) {
    spdlog::warn("agent {} subproblem stopped with status {}", agent.id, to_string(sol.status));
  }
  return AgentState{agent.id, sol.z, agent.dual};
}

ConsensusUpdate consensus_update(const ProblemDefinition& problem, const std::vector<AgentState>& agents,
                                 const Trajectory& previous_zbar, const OsscpConfig& cfg) {
  require_agents(agents);
  std::vector<Trajectory> zs, shifted;
  zs.reserve(agents.size());
  shifted.reserve(agents.size());
  for (const auto& a : agents) {
    zs.push_back(a.z);
    shifted.push_back(a.z + a.dual);
  }
  ConsensusUpdate out;
  out.agent_mean = mean(zs);
  const LinearizedProblem lin = linearize(problem, out.agent_mean);
  const SubproblemSolution sol = project_onto_Z(lin, mean(shifted), cfg.qp, cfg.mask);
  out.status = sol.status;
  if (sol.status == QpStatus::infeasible) {
    out.feasible = false;
    out.zbar = previous_zbar;
  } else {
    if (sol.status != QpStatus::solved) {
      spdlog::warn("consensus projection stopped with status {}", to_string(sol.status));
    }
    out.zbar = sol.z;
  }
  return out;
}

AgentState dual_update(const AgentState& agent, const Trajectory& zbar) {
  return AgentState{agent.id, agent.z, agent.dual + (agent.z - zbar)};
}

ResidualNorms residuals(const std::vector<AgentState>& agents, const Trajectory& zbar_new,
                        const Trajectory& zbar_old, double rho, const ConsensusMask& mask) {
  require_agents(agents);
  const Eigen::VectorXd sel = mask_indicator(mask, dims_of(zbar_new));
  ResidualNorms r;
  for (const auto& a : agents) {
    r.primal.push_back(sel.cwiseProduct((a.z - zbar_new).stacked()).norm());
  }
  r.dual = rho * sel.cwiseProduct((zbar_new - zbar_old).stacked()).norm();
  return r;
}

Trajectory initial_consensus(const ProblemDefinition& problem, const std::vector<Trajectory>& guesses,
                             const OsscpConfig& cfg) {
  const Trajectory m = mean(guesses);
  const SubproblemSolution sol = project_onto_Z(linearize(problem, m), m, cfg.qp, cfg.mask);
  if (sol.status == QpStatus::infeasible) {
    spdlog::warn("initial projection infeasible; starting from the mean of the guesses");
    return m;
  }
  return sol.z;
}

OsscpResult osscp_solve(const ProblemDefinition& problem, const std::vector<Trajectory>& guesses,
                        const OsscpConfig& cfg) {
  if (guesses.empty()) throw std::invalid_argument("osscp_solve needs at least one guess");
  cfg.validate();
  problem.validate();
  for (const auto& g : guesses) problem.require_matches(g);
  mask_weights(cfg.mask, problem.dims);

  const auto start = std::chrono::steady_clock::now();
  OsscpResult res;
  std::vector<AgentState> agents;
  for (std::size_t i = 0; i < guesses.size(); ++i) {
    const Trajectory& g = guesses[i];
    agents.push_back(AgentState{static_cast<int>(i), g, Trajectory(g.nx(), g.nu(), g.K())});
  }
  res.agent_history.push_back(agents);
  Trajectory zbar = initial_consensus(problem, guesses, cfg);
  res.initial_zbar = zbar;
  double prev_cost = true_penalized_cost(problem, cfg.weights, zbar).total;
  int failures = 0;
  res.stop_reason = "max-iters";

  for (int j = 1; j <= cfg.max_iters; ++j) {
    std::vector<AgentState> updated(agents.size());
    try {
      parallel_for(static_cast<int>(agents.size()), cfg.threads,
                   [&](int i) { updated[i] = primal_update(problem, agents[i], zbar, cfg); });
    } catch (const OsscpError& e) {
      throw OsscpError(fmt::format("iteration {}: {}", j, e.what()), j, e.agent());
    }

    const ConsensusUpdate cu = consensus_update(problem, updated, zbar, cfg);
    if (!cu.feasible) {
      ++failures;
      spdlog::warn("iteration {}: projection infeasible ({} consecutive)", j, failures);
      if (failures >= cfg.max_projection_failures) {
        throw OsscpError(fmt::format("iteration {}: projection infeasible {} times in a row", j, failures),
                         j, -1);
      }
    } else {
      failures = 0;
    }

    for (auto& a : updated) a = dual_update(a, cu.zbar);
    const ResidualNorms r = residuals(updated, cu.zbar, zbar, cfg.rho, cfg.mask);
    const double cost = true_penalized_cost(problem, cfg.weights, cu.zbar).total;

    ConsensusState state;
    state.iteration = j;
    state.zbar = cu.zbar;
    state.primal_norms = r.primal;
    state.dual_norm = r.dual;
    state.cost = cost;
    state.projection_failed = !cu.feasible;
    res.history.push_back(state);
    res.agent_history.push_back(updated);
    agents = std::move(updated);
    zbar = cu.zbar;
    res.iterations = j;

    spdlog::debug("OS-SCP iteration {}: primal {:.3e} dual {:.3e} cost {:.10g}", j, r.max_primal(),
                  r.dual, cost);
    const bool residuals_met = r.max_primal() <= cfg.eps_r && r.dual <= cfg.eps_s;
    if (residuals_met) {
      res.converged = true;
      res.stop_reason = "residuals";
      break;
    }
    if (cfg.stop_on_stagnation && std::abs(cost - prev_cost) <= cfg.eps_c) {
      res.converged = true;
      res.stop_reason = "stagnation";
      break;
    }
    prev_cost = cost;
  }
  res.zbar = zbar;
  res.final_cost = true_penalized_cost(problem, cfg.weights, zbar).total;
  res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace osscp
