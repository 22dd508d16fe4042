#pragma once

#include "osscp/problem.hpp"
#include "osscp/trajectory.hpp"

#include <vector>

namespace osscp {

/// First-order data of a cost term at one knot. `hessian` is non-empty only
/// for convex (quadratic) terms, which makes the model exact.
struct CostModel {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

/**
 * All problem data at a reference trajectory. Evaluating the stored models at
 * the reference reproduces the stored values exactly.
 */
struct LinearizedProblem {
  Dims dims;
  Trajectory reference;
  std::vector<VectorModel> dynamics;     ///< K entries, nx x nz Jacobians
  std::vector<VectorModel> inequality;   ///< K + 1 entries, ng x nz
  std::vector<VectorModel> equality;     ///< K + 1 entries, nh x nz
  std::vector<std::vector<CostModel>> costs;  ///< costs[term][k], k = 0..K
  std::vector<bool> cost_is_terminal;
  std::vector<ConvexSet> convex_sets;

  /// Linear dynamics model f~_k(z_k).
  Eigen::VectorXd dynamics_at(int k, const Eigen::VectorXd& zk) const;
  Eigen::VectorXd inequality_at(int k, const Eigen::VectorXd& zk) const;
  Eigen::VectorXd equality_at(int k, const Eigen::VectorXd& zk) const;
  /// Sum of the cost models at knot k (exact for convex terms).
  double cost_at(int k, const Eigen::VectorXd& zk) const;
};

LinearizedProblem linearize(const ProblemDefinition& problem, const Trajectory& ref);

/// Penalized cost split into its parts.
struct PenalizedCost {
  double cost = 0.0;        ///< running + terminal
  double dynamics = 0.0;    ///< sum of l1 dynamics defects (unweighted)
  double inequality = 0.0;  ///< sum of |g| or max(g, 0) (unweighted)
  double equality = 0.0;    ///< sum of |h| (unweighted)
  double total = 0.0;       ///< cost + w1*dynamics + w2*inequality + w3*equality
  bool in_convex_set = false;  ///< indicator term: z in Z^c
};

/// Finite part of the linearized penalized cost Theta(ref, z). Membership in
/// Z^c is reported separately instead of being added as +inf.
PenalizedCost penalized_linear_cost(const LinearizedProblem& lin, const PenaltyWeights& weights,
                                    const Trajectory& z, double set_tol = 1e-7);

/// Same quantity with the true nonlinear dynamics, constraints and costs.
PenalizedCost true_penalized_cost(const ProblemDefinition& problem, const PenaltyWeights& weights,
                                  const Trajectory& z, double set_tol = 1e-7);

/// Arithmetic mean of equally shaped trajectories.
Trajectory mean(const std::vector<Trajectory>& trajectories);

}  // namespace osscp
