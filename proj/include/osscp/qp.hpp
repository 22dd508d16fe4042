#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <string>

namespace osscp {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

/**
 * Convex quadratic program
 *
 *   min  1/2 x'Px + q'x + constant
 *   s.t. A_eq x  = b_eq
 *        A_in x <= b_in
 *        lower <= x <= upper
 *
 * P is stored in full and must be symmetric positive semidefinite.
 */
struct QuadraticProgram {
  SparseMatrix hessian;
  Eigen::VectorXd linear;
  double constant = 0.0;
  SparseMatrix eq_matrix;
  Eigen::VectorXd eq_rhs;
  SparseMatrix ineq_matrix;
  Eigen::VectorXd ineq_rhs;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int num_variables() const { return static_cast<int>(linear.size()); }
  double objective(const Eigen::VectorXd& x) const;
  /// Throws DimensionError on inconsistent shapes.
  void validate() const;
};

enum class QpStatus { solved, max_iterations, infeasible };

std::string to_string(QpStatus s);

struct QpSettings {
  double tol = 1e-8;
  int max_iterations = 20000;
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;  ///< over-relaxation
  int scaling_iterations = 10;
  bool adaptive_rho = true;
  int check_interval = 10;
  double infeasibility_tol = 1e-9;
};

struct QpResult {
  QpStatus status = QpStatus::max_iterations;
  Eigen::VectorXd x;
  Eigen::VectorXd y_eq;     ///< multipliers of A_eq x = b_eq
  Eigen::VectorXd y_ineq;   ///< multipliers of A_in x <= b_in (>= 0)
  Eigen::VectorXd y_bound;  ///< bound multipliers, > 0 upper active, < 0 lower active
  double objective = 0.0;
  double primal_residual = 0.0;      ///< max constraint violation
  double dual_residual = 0.0;        ///< max |Px + q + A'y|
  double complementarity = 0.0;      ///< max multiplier-slack product mismatch
  int iterations = 0;
  bool polished = false;
};

/// Solves `qp` with an ADMM operator-splitting scheme followed by
/// active-set polishing. Deterministic for identical inputs.
QpResult solve_qp(const QuadraticProgram& qp, const QpSettings& settings = {});

/// KKT residuals of a candidate primal/dual point, in the original scaling.
void evaluate_kkt(const QuadraticProgram& qp, QpResult& r);

}  // namespace osscp
