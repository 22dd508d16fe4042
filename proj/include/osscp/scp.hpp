#pragma once

#include "osscp/linearization.hpp"
#include "osscp/subproblem.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace osscp {

struct ScpConfig {
  PenaltyWeights weights;
  double eps_c = 1e-4;  ///< stop when |J_pen(z^{j+1}) - J_pen(z^j)| <= eps_c
  int max_iters = 100;
  QpSettings qp;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

/// History of one prox-linear run. `iterates[0]` is the initial guess.
struct ScpRunRecord {
  std::vector<Trajectory> iterates;
  std::vector<double> costs;         ///< true penalized cost of each iterate
  std::vector<QpStatus> statuses;    ///< one per subproblem solved
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string error;                 ///< non-empty when the run failed
  double wall_time = 0.0;            ///< seconds, informational only

  const Trajectory& solution() const { return iterates.back(); }
};

/// Subproblem failure inside an SCP run.
class ScpError : public std::runtime_error {
 public:
  ScpError(const std::string& what, int iteration) : std::runtime_error(what), iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

/// Prox-linear iteration from `guess` until cost stagnation or the cap.
/// Throws ScpError when a subproblem is infeasible.
ScpRunRecord scp_solve(const ProblemDefinition& problem, const Trajectory& guess, const ScpConfig& cfg);

/// One independent scp_solve per guess, on up to `threads` workers
/// (0 = hardware concurrency). Records follow the order of `guesses`; a
/// failing run stores its message in `error` instead of throwing.
std::vector<ScpRunRecord> multi_start(const ProblemDefinition& problem,
                                      const std::vector<Trajectory>& guesses, const ScpConfig& cfg,
                                      int threads = 0);

}  // namespace osscp
