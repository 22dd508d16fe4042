#pragma once

#include "osscp/linearization.hpp"
#include "osscp/subproblem.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace osscp {

/// One ADMM agent: its trajectory z_i and scaled dual xi_i.
struct AgentState {
  int id = 0;
  Trajectory z;
  Trajectory dual;
};

/// Consensus variable and residuals after outer iteration `iteration`.
struct ConsensusState {
  int iteration = 0;
  Trajectory zbar;
  std::vector<double> primal_norms;  ///< ||z_i - zbar|| per agent
  double dual_norm = 0.0;            ///< rho ||zbar^{j+1} - zbar^j||
  double cost = 0.0;                 ///< true penalized cost of zbar
  bool projection_failed = false;    ///< zbar kept from the previous iteration
};

struct OsscpConfig {
  double rho = 3.0;
  double eps_r = 1e-3;
  double eps_s = 1e-3;
  double eps_c = 1e-4;
  int max_iters = 200;
  PenaltyWeights weights;  ///< wp is unused; rho plays its role
  QpSettings qp;
  ConsensusMask mask;      ///< empty = full consensus
  /// Also stop when the consensus cost stagnates while residuals are still
  /// above tolerance.
  bool stop_on_stagnation = false;
  int max_projection_failures = 5;
  int threads = 0;         ///< workers for the agent updates, 0 = hardware

  void validate() const;
};

/// Projection of the consensus step.
struct ConsensusUpdate {
  Trajectory zbar;
  Trajectory agent_mean;  ///< linearization point of the projection
  bool feasible = true;
  QpStatus status = QpStatus::solved;
};

struct ResidualNorms {
  std::vector<double> primal;  ///< per agent
  double dual = 0.0;
  double max_primal() const;
};

struct OsscpResult {
  Trajectory initial_zbar;
  std::vector<ConsensusState> history;             ///< one entry per outer iteration
  std::vector<std::vector<AgentState>> agent_history;  ///< [0] holds the guesses
  Trajectory zbar;
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;  ///< stopped by residuals, or by stagnation when enabled
  std::string stop_reason;  ///< "residuals", "stagnation" or "max-iters"
  double wall_time = 0.0;   ///< seconds, informational only
};

/// Failure of an agent update or of the projection, tagged with its context.
class OsscpError : public std::runtime_error {
 public:
  OsscpError(const std::string& what, int iteration, int agent)
      : std::runtime_error(what), iteration_(iteration), agent_(agent) {}
  int iteration() const { return iteration_; }
  int agent() const { return agent_; }  ///< -1 for the consensus step

 private:
  int iteration_;
  int agent_;
};

/// argmin_z Theta(z_i, z) + (rho/2)||z - zbar + xi_i||^2, linearized about the
/// agent's own trajectory. The dual is left unchanged.
AgentState primal_update(const ProblemDefinition& problem, const AgentState& agent,
                         const Trajectory& zbar, const OsscpConfig& cfg);

/// Projects mean(z_i + xi_i) onto Z linearized at mean(z_i). When the set is
/// empty the previous consensus variable is returned with feasible = false.
ConsensusUpdate consensus_update(const ProblemDefinition& problem, const std::vector<AgentState>& agents,
                                 const Trajectory& previous_zbar, const OsscpConfig& cfg);

/// xi_i + (z_i - zbar).
AgentState dual_update(const AgentState& agent, const Trajectory& zbar);

/// Primal norms ||z_i - zbar_new|| and dual norm rho ||zbar_new - zbar_old||,
/// over the masked components.
ResidualNorms residuals(const std::vector<AgentState>& agents, const Trajectory& zbar_new,
                        const Trajectory& zbar_old, double rho, const ConsensusMask& mask = {});

/// Initial consensus variable: the mean of the guesses projected onto Z
/// linearized at that mean.
Trajectory initial_consensus(const ProblemDefinition& problem, const std::vector<Trajectory>& guesses,
                             const OsscpConfig& cfg);

/// Full consensus-ADMM run from the given guesses (one agent per guess).
OsscpResult osscp_solve(const ProblemDefinition& problem, const std::vector<Trajectory>& guesses,
                        const OsscpConfig& cfg);

}  // namespace osscp
