#include "osscp/qp.hpp"

#include "osscp/problem.hpp"

#include <Eigen/SparseCholesky>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace osscp {
namespace {

constexpr double kEqRhoScale = 1e3;
constexpr double kMinScale = 1e-4;
constexpr double kMaxScale = 1e4;
constexpr int kPolishRounds = 25;
constexpr int kStallChecks = 20;

using Triplet = Eigen::Triplet<double>;

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

double col_inf_norm(const SparseMatrix& m, int j) {
  double r = 0.0;
  for (SparseMatrix::InnerIterator it(m, j); it; ++it) r = std::max(r, std::abs(it.value()));
  return r;
}

// Constraints stacked as l <= A x <= u: equality rows, inequality rows, then
// one identity row per variable with at least one finite bound.
struct StackedConstraints {
  SparseMatrix A;
  Eigen::VectorXd l;
  Eigen::VectorXd u;
  int n_eq = 0;
  int n_in = 0;
  std::vector<int> bound_var;  // variable index of each bound row
};

StackedConstraints stack(const QuadraticProgram& qp) {
  const int n = qp.num_variables();
  StackedConstraints s;
  s.n_eq = static_cast<int>(qp.eq_matrix.rows());
  s.n_in = static_cast<int>(qp.ineq_matrix.rows());
  for (int j = 0; j < n; ++j) {
    if (std::isfinite(qp.lower[j]) || std::isfinite(qp.upper[j])) s.bound_var.push_back(j);
  }
  const int m = s.n_eq + s.n_in + static_cast<int>(s.bound_var.size());
  std::vector<Triplet> trips;
  trips.reserve(qp.eq_matrix.nonZeros() + qp.ineq_matrix.nonZeros() + s.bound_var.size());
  for (int j = 0; j < qp.eq_matrix.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(qp.eq_matrix, j); it; ++it) {
      trips.emplace_back(it.row(), it.col(), it.value());
    }
  }
  for (int j = 0; j < qp.ineq_matrix.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(qp.ineq_matrix, j); it; ++it) {
      trips.emplace_back(s.n_eq + it.row(), it.col(), it.value());
    }
  }
  s.l.resize(m);
  s.u.resize(m);
  s.l.head(s.n_eq) = qp.eq_rhs;
  s.u.head(s.n_eq) = qp.eq_rhs;
  s.l.segment(s.n_eq, s.n_in).setConstant(-kInf);
  s.u.segment(s.n_eq, s.n_in) = qp.ineq_rhs;
  for (std::size_t i = 0; i < s.bound_var.size(); ++i) {
    const int row = s.n_eq + s.n_in + static_cast<int>(i);
    const int j = s.bound_var[i];
    trips.emplace_back(row, j, 1.0);
    s.l[row] = qp.lower[j];
    s.u[row] = qp.upper[j];
  }
  s.A.resize(m, n);
  s.A.setFromTriplets(trips.begin(), trips.end());
  s.A.makeCompressed();
  return s;
}

// Ruiz equilibration of the KKT matrix plus a cost scaling factor.
struct Scaling {
  Eigen::VectorXd D;  // variables
  Eigen::VectorXd E;  // constraint rows
  double c = 1.0;     // cost
};

Scaling equilibrate(SparseMatrix& P, Eigen::VectorXd& q, SparseMatrix& A, int iterations) {
  const int n = static_cast<int>(P.cols());
  const int m = static_cast<int>(A.rows());
  Scaling sc{Eigen::VectorXd::Ones(n), Eigen::VectorXd::Ones(m), 1.0};
  SparseMatrix At;
  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXd d(n), e(m);
    for (int j = 0; j < n; ++j) d[j] = std::max(col_inf_norm(P, j), col_inf_norm(A, j));
    At = A.transpose();
    for (int i = 0; i < m; ++i) e[i] = col_inf_norm(At, i);
    auto inv_sqrt = [](double v) {
      if (v < kMinScale) return 1.0;
      return std::clamp(1.0 / std::sqrt(v), kMinScale, kMaxScale);
    };
    d = d.unaryExpr(inv_sqrt);
    e = e.unaryExpr(inv_sqrt);
    P = d.asDiagonal() * P * d.asDiagonal();
    A = e.asDiagonal() * A * d.asDiagonal();
    q = d.cwiseProduct(q);
    sc.D = sc.D.cwiseProduct(d);
    sc.E = sc.E.cwiseProduct(e);
  }
  if (iterations > 0 && n > 0) {
    double mean_col = 0.0;
    for (int j = 0; j < n; ++j) mean_col += col_inf_norm(P, j);
    mean_col /= n;
    double gamma = std::max(mean_col, inf_norm(q));
    gamma = gamma < kMinScale ? 1.0 : std::clamp(1.0 / gamma, kMinScale, kMaxScale);
    P *= gamma;
    q *= gamma;
    sc.c = gamma;
  }
  return sc;
}

bool presolve_infeasible(const QuadraticProgram& qp) {
  if ((qp.lower.array() > qp.upper.array()).any()) return true;
  // Empty equality rows with nonzero right-hand side.
  Eigen::VectorXd row_norm = Eigen::VectorXd::Zero(qp.eq_matrix.rows());
  for (int j = 0; j < qp.eq_matrix.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(qp.eq_matrix, j); it; ++it) {
      row_norm[it.row()] = std::max(row_norm[it.row()], std::abs(it.value()));
    }
  }
  for (Eigen::Index i = 0; i < row_norm.size(); ++i) {
    if (row_norm[i] == 0.0 && std::abs(qp.eq_rhs[i]) > 0.0) return true;
  }
  Eigen::VectorXd in_norm = Eigen::VectorXd::Zero(qp.ineq_matrix.rows());
  for (int j = 0; j < qp.ineq_matrix.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(qp.ineq_matrix, j); it; ++it) {
      in_norm[it.row()] = std::max(in_norm[it.row()], std::abs(it.value()));
    }
  }
  for (Eigen::Index i = 0; i < in_norm.size(); ++i) {
    if (in_norm[i] == 0.0 && qp.ineq_rhs[i] < 0.0) return true;
  }
  return false;
}

class AdmmSolver {
 public:
  AdmmSolver(const QuadraticProgram& qp, const QpSettings& settings)
      : qp_(qp), set_(settings), cons_(stack(qp)) {
    P_ = qp.hessian;
    q_ = qp.linear;
    A_ = cons_.A;
    sc_ = equilibrate(P_, q_, A_, set_.scaling_iterations);
    At_ = A_.transpose();
    n_ = static_cast<int>(q_.size());
    m_ = static_cast<int>(A_.rows());
    l_ = sc_.E.cwiseProduct(cons_.l);
    u_ = sc_.E.cwiseProduct(cons_.u);
    is_eq_.resize(m_);
    for (int i = 0; i < m_; ++i) is_eq_[i] = cons_.l[i] == cons_.u[i];
  }

  QpResult run();

 private:
  void set_rho(double rho);
  void factorize();
  Eigen::VectorXd project_box(const Eigen::VectorXd& v) const {
    return v.cwiseMax(l_).cwiseMin(u_);
  }
  QpResult unscaled(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
  bool primal_infeasible(const Eigen::VectorXd& dy) const;
  bool polish(const Eigen::VectorXd& z, const Eigen::VectorXd& y, QpResult& out) const;
  bool acceptable(const QpResult& r) const {
    return r.primal_residual <= set_.tol && r.dual_residual <= set_.tol &&
           r.complementarity <= set_.tol;
  }

  const QuadraticProgram& qp_;
  QpSettings set_;
  StackedConstraints cons_;
  SparseMatrix P_, A_, At_;
  Eigen::VectorXd q_, l_, u_;
  Scaling sc_;
  std::vector<bool> is_eq_;
  int n_ = 0, m_ = 0;
  double rho_ = 0.1;
  Eigen::VectorXd rho_vec_;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
  bool analyzed_ = false;
};

void AdmmSolver::set_rho(double rho) {
  rho_ = std::clamp(rho, 1e-6, 1e6);
  rho_vec_.resize(m_);
  for (int i = 0; i < m_; ++i) rho_vec_[i] = is_eq_[i] ? kEqRhoScale * rho_ : rho_;
  factorize();
}

void AdmmSolver::factorize() {
  SparseMatrix I(n_, n_);
  I.setIdentity();
  SparseMatrix M = P_ + set_.sigma * I + SparseMatrix(At_ * rho_vec_.asDiagonal() * A_);
  if (!analyzed_) {
    ldlt_.analyzePattern(M);
    analyzed_ = true;
  }
  ldlt_.factorize(M);
  if (ldlt_.info() != Eigen::Success) throw std::runtime_error("QP factorization failed");
}

QpResult AdmmSolver::unscaled(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
  QpResult r;
  r.x = sc_.D.cwiseProduct(x);
  const Eigen::VectorXd y_full = sc_.E.cwiseProduct(y) / sc_.c;
  r.y_eq = y_full.head(cons_.n_eq);
  r.y_ineq = y_full.segment(cons_.n_eq, cons_.n_in);
  r.y_bound = Eigen::VectorXd::Zero(n_);
  for (std::size_t i = 0; i < cons_.bound_var.size(); ++i) {
    r.y_bound[cons_.bound_var[i]] = y_full[cons_.n_eq + cons_.n_in + static_cast<int>(i)];
  }
  evaluate_kkt(qp_, r);
  return r;
}

bool AdmmSolver::primal_infeasible(const Eigen::VectorXd& dy_in) const {
  Eigen::VectorXd dy = dy_in;
  // Components pushing against an infinite bound cannot certify anything.
  for (int i = 0; i < m_; ++i) {
    if ((dy[i] > 0 && !std::isfinite(u_[i])) || (dy[i] < 0 && !std::isfinite(l_[i]))) dy[i] = 0.0;
  }
  const double norm_dy = inf_norm(sc_.E.cwiseProduct(dy));
  if (norm_dy < 1e-12) return false;
  const double tol = set_.infeasibility_tol;
  const Eigen::VectorXd Atdy = sc_.D.cwiseInverse().cwiseProduct(At_ * dy);
  if (inf_norm(Atdy) > tol * norm_dy) return false;
  double support = 0.0;
  for (int i = 0; i < m_; ++i) {
    if (dy[i] > 0) support += u_[i] * dy[i];
    if (dy[i] < 0) support += l_[i] * dy[i];
  }
  return support < -tol * norm_dy;
}

bool AdmmSolver::polish(const Eigen::VectorXd& z, const Eigen::VectorXd& y, QpResult& out) const {
  // side: 0 inactive, -1 at lower bound, +1 at upper bound, 2 equality.
  std::vector<int> side(m_, 0);
  for (int i = 0; i < m_; ++i) {
    if (is_eq_[i]) {
      side[i] = 2;
    } else if (z[i] - l_[i] < -y[i]) {
      side[i] = -1;
    } else if (u_[i] - z[i] < y[i]) {
      side[i] = 1;
    }
  }
  const double delta = 1e-9;
  const double feas_tol = 1e-12 * (1.0 + std::max(inf_norm(l_.cwiseMin(1e20).cwiseMax(-1e20)),
                                                  inf_norm(u_.cwiseMin(1e20).cwiseMax(-1e20))));

  Eigen::VectorXd x_pol;
  Eigen::VectorXd y_pol;
  for (int round = 0; round < kPolishRounds; ++round) {
    std::vector<int> active;
    for (int i = 0; i < m_; ++i) {
      if (side[i] != 0) active.push_back(i);
    }
    const int na = static_cast<int>(active.size());

    // Quasi-definite reduced KKT [P + dI, Aa'; Aa, -dI].
    std::vector<Triplet> trips;
    for (int j = 0; j < n_; ++j) {
      for (SparseMatrix::InnerIterator it(P_, j); it; ++it) trips.emplace_back(it.row(), it.col(), it.value());
      trips.emplace_back(j, j, delta);
    }
    Eigen::VectorXd rhs(n_ + na);
    rhs.head(n_) = -q_;
    for (int a = 0; a < na; ++a) {
      const int i = active[a];
      for (SparseMatrix::InnerIterator it(At_, i); it; ++it) {
        trips.emplace_back(n_ + a, it.row(), it.value());
        trips.emplace_back(it.row(), n_ + a, it.value());
      }
      trips.emplace_back(n_ + a, n_ + a, -delta);
      rhs[n_ + a] = side[i] == 1 ? u_[i] : l_[i];
    }
    SparseMatrix K(n_ + na, n_ + na);
    K.setFromTriplets(trips.begin(), trips.end());
    Eigen::SimplicialLDLT<SparseMatrix> fact(K);
    if (fact.info() != Eigen::Success) return false;

    // Iterative refinement against the unregularized matrix.
    SparseMatrix K0 = K;
    for (int j = 0; j < n_ + na; ++j) K0.coeffRef(j, j) -= (j < n_ ? delta : -delta);
    Eigen::VectorXd sol = fact.solve(rhs);
    for (int r = 0; r < 5; ++r) sol += fact.solve(rhs - K0 * sol);
    if (!sol.allFinite()) return false;

    x_pol = sol.head(n_);
    y_pol = Eigen::VectorXd::Zero(m_);
    for (int a = 0; a < na; ++a) y_pol[active[a]] = sol[n_ + a];

    // Drop wrong-sign multipliers and add violated rows.
    bool changed = false;
    const Eigen::VectorXd Ax = A_ * x_pol;
    for (int i = 0; i < m_; ++i) {
      if (side[i] == 1 && y_pol[i] < 0.0) {
        side[i] = 0;
        changed = true;
      } else if (side[i] == -1 && y_pol[i] > 0.0) {
        side[i] = 0;
        changed = true;
      } else if (side[i] == 0 && Ax[i] > u_[i] + feas_tol) {
        side[i] = 1;
        changed = true;
      } else if (side[i] == 0 && Ax[i] < l_[i] - feas_tol) {
        side[i] = -1;
        changed = true;
      }
    }
    if (!changed) break;
  }

  QpResult cand = unscaled(x_pol, y_pol);
  spdlog::trace("polish: residuals {:.3g} {:.3g} {:.3g}", cand.primal_residual, cand.dual_residual,
                cand.complementarity);
  if (!acceptable(cand)) return false;
  cand.polished = true;
  out = std::move(cand);
  return true;
}

QpResult AdmmSolver::run() {
  if (presolve_infeasible(qp_)) {
    QpResult r;
    r.status = QpStatus::infeasible;
    r.x = Eigen::VectorXd::Zero(n_);
    r.y_eq = Eigen::VectorXd::Zero(cons_.n_eq);
    r.y_ineq = Eigen::VectorXd::Zero(cons_.n_in);
    r.y_bound = Eigen::VectorXd::Zero(n_);
    evaluate_kkt(qp_, r);
    return r;
  }
  set_rho(set_.rho);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n_);
  Eigen::VectorXd z = project_box(Eigen::VectorXd::Zero(m_));
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m_);
  double polish_trigger = 1e-3;
  // Checks since the relative residual last dropped by 10 percent; a stalled
  // iteration gets a polish attempt regardless of the trigger.
  double stall_ref = kInf;
  int stalled_checks = 0;
  QpResult best;
  bool have_best = false;

  for (int iter = 1; iter <= set_.max_iterations; ++iter) {
    const Eigen::VectorXd rhs = set_.sigma * x - q_ + At_ * (rho_vec_.cwiseProduct(z) - y);
    const Eigen::VectorXd x_tilde = ldlt_.solve(rhs);
    const Eigen::VectorXd z_tilde = A_ * x_tilde;
    x = set_.alpha * x_tilde + (1.0 - set_.alpha) * x;
    const Eigen::VectorXd z_relax = set_.alpha * z_tilde + (1.0 - set_.alpha) * z;
    const Eigen::VectorXd z_next = project_box(z_relax + y.cwiseQuotient(rho_vec_));
    const Eigen::VectorXd dy = rho_vec_.cwiseProduct(z_relax - z_next);
    y += dy;
    z = z_next;

    if (iter % set_.check_interval != 0 && iter != set_.max_iterations) continue;

    // Residuals in the scaled space drive rho adaptation and polishing.
    const Eigen::VectorXd Ax = A_ * x;
    const Eigen::VectorXd Px = P_ * x;
    const Eigen::VectorXd Aty = At_ * y;
    const double prim = inf_norm(sc_.E.cwiseInverse().cwiseProduct(Ax - z));
    const double prim_scale = std::max({inf_norm(sc_.E.cwiseInverse().cwiseProduct(Ax)),
                                        inf_norm(sc_.E.cwiseInverse().cwiseProduct(z)), 1e-12});
    const Eigen::VectorXd dinv = sc_.D.cwiseInverse();
    const double dual = inf_norm(dinv.cwiseProduct(Px + q_ + Aty)) / sc_.c;
    const double dual_scale = std::max({inf_norm(dinv.cwiseProduct(Px)), inf_norm(dinv.cwiseProduct(Aty)),
                                        inf_norm(dinv.cwiseProduct(q_)), 1e-12}) / sc_.c;

    if (primal_infeasible(dy)) {
      QpResult r = unscaled(x, y);
      r.status = QpStatus::infeasible;
      r.iterations = iter;
      return r;
    }

    QpResult current = unscaled(x, y);
    current.iterations = iter;
    if (acceptable(current)) {
      QpResult pol;
      if (polish(z, y, pol) && pol.primal_residual <= current.primal_residual + set_.tol) {
        pol.iterations = iter;
        pol.status = QpStatus::solved;
        return pol;
      }
      current.status = QpStatus::solved;
      return current;
    }
    const double rel = std::max(prim / prim_scale, dual / dual_scale);
    spdlog::trace("iter {} rel {:.3g} rho {:.3g}", iter, rel, rho_);
    if (rel < 0.9 * stall_ref) {
      stall_ref = rel;
      stalled_checks = 0;
    } else {
      ++stalled_checks;
    }
    if (rel <= polish_trigger || stalled_checks >= kStallChecks) {
      stalled_checks = 0;
      QpResult pol;
      if (polish(z, y, pol)) {
        pol.iterations = iter;
        pol.status = QpStatus::solved;
        return pol;
      }
      if (rel <= polish_trigger) polish_trigger = std::max(polish_trigger * 0.1, 1e-14);
    }
    const double merit = std::max({current.primal_residual, current.dual_residual, current.complementarity});
    if (!have_best || merit < std::max({best.primal_residual, best.dual_residual, best.complementarity})) {
      best = current;
      have_best = true;
    }

    if (set_.adaptive_rho && prim > 0 && dual > 0) {
      const double ratio = std::sqrt((prim / prim_scale) / (dual / dual_scale));
      const double rho_new = std::clamp(rho_ * ratio, 1e-6, 1e6);
      if (rho_new > 5.0 * rho_ || rho_new < 0.2 * rho_) set_rho(rho_new);
    }
  }
  best.status = QpStatus::max_iterations;
  best.iterations = set_.max_iterations;
  return best;
}

}  // namespace

std::string to_string(QpStatus s) {
  switch (s) {
    case QpStatus::solved: return "solved";
    case QpStatus::max_iterations: return "max-iters";
    case QpStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

double QuadraticProgram::objective(const Eigen::VectorXd& x) const {
  return 0.5 * x.dot(hessian * x) + linear.dot(x) + constant;
}

void QuadraticProgram::validate() const {
  const int n = num_variables();
  auto bad = [](const std::string& what) { throw DimensionError("QuadraticProgram: " + what); };
  if (hessian.rows() != n || hessian.cols() != n) bad("Hessian is not n x n");
  if (eq_matrix.cols() != n || eq_matrix.rows() != eq_rhs.size()) bad("equality block shape");
  if (ineq_matrix.cols() != n || ineq_matrix.rows() != ineq_rhs.size()) bad("inequality block shape");
  if (lower.size() != n || upper.size() != n) bad("bound vectors");
  const SparseMatrix asym = hessian - SparseMatrix(hessian.transpose());
  if (asym.nonZeros() > 0 && asym.coeffs().cwiseAbs().maxCoeff() > 1e-12 * (1.0 + hessian.norm())) {
    bad("Hessian is not symmetric");
  }
}

void evaluate_kkt(const QuadraticProgram& qp, QpResult& r) {
  const Eigen::VectorXd& x = r.x;
  double prim = 0.0;
  double compl_res = 0.0;
  if (qp.eq_matrix.rows() > 0) prim = std::max(prim, inf_norm(qp.eq_matrix * x - qp.eq_rhs));
  if (qp.ineq_matrix.rows() > 0) {
    const Eigen::VectorXd slack = qp.ineq_rhs - qp.ineq_matrix * x;
    for (Eigen::Index i = 0; i < slack.size(); ++i) {
      prim = std::max(prim, -slack[i]);
      compl_res = std::max(compl_res, std::abs(std::min(r.y_ineq[i], slack[i])));
    }
  }
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    prim = std::max({prim, qp.lower[j] - x[j], x[j] - qp.upper[j]});
    const double yb = r.y_bound[j];
    const double up_slack = qp.upper[j] - x[j];
    const double lo_slack = x[j] - qp.lower[j];
    const double c_up = std::abs(std::min(std::max(yb, 0.0), up_slack));
    const double c_lo = std::abs(std::min(std::max(-yb, 0.0), lo_slack));
    compl_res = std::max({compl_res, c_up, c_lo});
  }
  Eigen::VectorXd grad = qp.hessian * x + qp.linear + r.y_bound;
  if (qp.eq_matrix.rows() > 0) grad += qp.eq_matrix.transpose() * r.y_eq;
  if (qp.ineq_matrix.rows() > 0) grad += qp.ineq_matrix.transpose() * r.y_ineq;
  r.primal_residual = prim;
  r.dual_residual = inf_norm(grad);
  r.complementarity = compl_res;
  r.objective = qp.objective(x);
}

QpResult solve_qp(const QuadraticProgram& qp, const QpSettings& settings) {
  if (!(settings.tol > 0)) throw std::invalid_argument("solve_qp: tol must be positive");
  if (settings.max_iterations < 1) throw std::invalid_argument("solve_qp: max_iterations must be >= 1");
  qp.validate();
  AdmmSolver solver(qp, settings);
  return solver.run();
}

}  // namespace osscp
