#pragma once

#include "osscp/linearization.hpp"
#include "osscp/qp.hpp"

#include <stdexcept>
#include <vector>

namespace osscp {

/// Selects the components of z_k that take part in consensus. Empty selects
/// all of them.
using ConsensusMask = std::vector<bool>;

/// Weight given to components left out of the consensus mask, so that the
/// consensus and projection problems stay strictly convex in them.
inline constexpr double kUnmaskedWeight = 1e-6;

/// Per-entry weights over a stacked trajectory of size nz * (K + 1).
Eigen::VectorXd mask_weights(const ConsensusMask& mask, const Dims& dims);

/**
 * Variable layout of the subproblem QP: the stacked trajectory followed by
 * the slack blocks of the dynamics, inequality and equality penalties.
 */
struct SubproblemLayout {
  Dims dims;
  InequalityPenalty inequality = InequalityPenalty::positive_part;

  int num_z() const { return dims.nz() * (dims.K + 1); }
  int num_dyn() const { return dims.nx * dims.K; }
  int num_g() const { return dims.ng * (dims.K + 1); }
  int num_h() const { return dims.nh * (dims.K + 1); }
  int offset_dyn() const { return num_z(); }
  int offset_g() const { return offset_dyn() + num_dyn(); }
  int offset_h() const { return offset_g() + num_g(); }
  int num_variables() const { return offset_h() + num_h(); }
  int z_index(int k, int i) const { return k * dims.nz() + i; }
};

struct SubproblemSolution {
  QpStatus status = QpStatus::max_iterations;
  Trajectory z;
  Eigen::VectorXd slacks;  ///< [t_dyn; t_g; t_h]
  double objective = 0.0;  ///< value of the QP objective, constant included
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double complementarity = 0.0;
  int iterations = 0;
};

/// Raised when a convex subproblem cannot be solved.
class SubproblemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Epigraph QP of Theta(ref, z) + (wp/2)||z - prox_center||^2.
QuadraticProgram build_scp_qp(const LinearizedProblem& lin, const PenaltyWeights& weights,
                              const Trajectory& prox_center);

/// Epigraph QP of Theta(ref, z) + (rho/2)||z - zbar + dual||^2, restricted to
/// the masked components. `weights.wp` is ignored. Throws for rho <= 0.
QuadraticProgram build_consensus_qp(const LinearizedProblem& lin, double rho, const Trajectory& zbar,
                                    const Trajectory& dual, const PenaltyWeights& weights,
                                    const ConsensusMask& mask = {});

/// Solves a QP built by one of the builders above and splits the solution.
SubproblemSolution solve_subproblem(const QuadraticProgram& qp, const SubproblemLayout& layout,
                                    const QpSettings& settings = {});

/// argmin over z in Z of ||z - v||^2 (masked), where Z holds Z^c, the
/// linearized dynamics as equalities, g~ <= 0 and h~ = 0 of `lin_at_mean`.
/// A status of `infeasible` means the convexified set is empty.
SubproblemSolution project_onto_Z(const LinearizedProblem& lin_at_mean, const Trajectory& v,
                                  const QpSettings& settings = {}, const ConsensusMask& mask = {});

}  // namespace osscp
