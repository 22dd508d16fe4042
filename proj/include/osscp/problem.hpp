#pragma once

#include "osscp/trajectory.hpp"

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace osscp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Dims {
  int nx = 0;
  int nu = 0;
  int K = 0;
  int ng = 0;  ///< nonconvex inequality rows per knot
  int nh = 0;  ///< nonconvex equality rows per knot

  int nz() const { return nx + nu; }
  friend bool operator==(const Dims&, const Dims&) = default;
};

/// Value and Jacobian of a vector-valued map of z_k.
struct VectorModel {
  Eigen::VectorXd value;
  Eigen::MatrixXd jacobian;
};

/// Value and gradient of a scalar map of z_k.
struct ScalarModel {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

using StepMap = std::function<VectorModel(int k, const Eigen::VectorXd& zk)>;
using StepScalar = std::function<ScalarModel(int k, const Eigen::VectorXd& zk)>;

/**
 * One additive cost term.
 *
 * Running terms apply at k = 0..K-1, terminal terms at k = K. A term flagged
 * `convex` must be quadratic with the constant Hessian returned by `hessian`;
 * it is then carried into each convex subproblem exactly instead of being
 * linearized.
 */
struct CostTerm {
  enum class Stage { running, terminal };

  std::string name;
  Stage stage = Stage::running;
  bool convex = false;
  StepScalar eval;
  std::function<Eigen::MatrixXd(int k)> hessian;
};

/**
 * Convex set Z^c_k for one knot: box bounds plus optional affine equalities
 * `eq_matrix * z_k == eq_rhs`.
 */
struct ConvexSet {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  Eigen::MatrixXd eq_matrix;
  Eigen::VectorXd eq_rhs;

  static ConvexSet unbounded(int nz);
  bool contains(const Eigen::VectorXd& zk, double tol) const;
};

/**
 * Discrete-time optimal control problem
 *
 *   min   sum_k J_k(z_k) + J_K(z_K)
 *   s.t.  x_{k+1} = f_k(z_k),  g(z_k) <= 0,  h(z_k) = 0,  z_k in Z^c_k.
 *
 * All callbacks must return finite values for finite inputs.
 */
struct ProblemDefinition {
  Dims dims;
  StepMap dynamics;            ///< required; returns x_{k+1} and d/dz_k
  StepMap inequality;          ///< optional when dims.ng == 0
  StepMap equality;            ///< optional when dims.nh == 0
  std::vector<CostTerm> costs;
  std::vector<ConvexSet> convex_sets;  ///< K + 1 entries

  /// Throws DimensionError when callbacks or sets disagree with `dims`.
  void validate() const;
  void require_matches(const Trajectory& z) const;
};

/// Treatment of the linearized inequality g~ in the penalty.
enum class InequalityPenalty {
  absolute,      ///< w2 * |g~|, literal form
  positive_part  ///< w2 * max(g~, 0)
};

struct PenaltyWeights {
  double w1 = 100.0;  ///< dynamics defect, l1
  double w2 = 100.0;  ///< inequality violation
  double w3 = 100.0;  ///< equality violation, l1
  double wp = 3.0;    ///< proximal (trust-region) weight
  InequalityPenalty inequality = InequalityPenalty::positive_part;

  /// Throws std::invalid_argument for negative weights or, when
  /// `require_positive`, for a zero constraint weight.
  void validate(bool require_positive = true) const;
  friend bool operator==(const PenaltyWeights&, const PenaltyWeights&) = default;
};

std::string to_string(InequalityPenalty p);
InequalityPenalty inequality_penalty_from_string(const std::string& s);

}  // namespace osscp
