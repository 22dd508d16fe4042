#include "osscp/subproblem.hpp"

#include <fmt/format.h>

#include <cmath>

namespace osscp {
namespace {

using Triplet = Eigen::Triplet<double>;

class QpBuilder {
 public:
  explicit QpBuilder(int n)
      : n_(n),
        q_(Eigen::VectorXd::Zero(n)),
        lower_(Eigen::VectorXd::Constant(n, -kInf)),
        upper_(Eigen::VectorXd::Constant(n, kInf)) {}

  void add_hessian(int i, int j, double v) { P_.emplace_back(i, j, v); }
  void add_linear(int i, double v) { q_[i] += v; }
  void add_constant(double v) { constant_ += v; }

  /// Row sum_j coef_j x_{idx_j} (= or <=) rhs.
  int new_eq_row(double rhs) {
    eq_rhs_.push_back(rhs);
    return static_cast<int>(eq_rhs_.size()) - 1;
  }
  int new_ineq_row(double rhs) {
    in_rhs_.push_back(rhs);
    return static_cast<int>(in_rhs_.size()) - 1;
  }
  void eq_coef(int row, int col, double v) { eq_.emplace_back(row, col, v); }
  void ineq_coef(int row, int col, double v) { in_.emplace_back(row, col, v); }

  void bound(int i, double lo, double hi) {
    lower_[i] = std::max(lower_[i], lo);
    upper_[i] = std::min(upper_[i], hi);
  }

  QuadraticProgram build() const {
    QuadraticProgram qp;
    qp.hessian.resize(n_, n_);
    qp.hessian.setFromTriplets(P_.begin(), P_.end());
    qp.hessian.makeCompressed();
    qp.linear = q_;
    qp.constant = constant_;
    qp.eq_matrix.resize(static_cast<int>(eq_rhs_.size()), n_);
    qp.eq_matrix.setFromTriplets(eq_.begin(), eq_.end());
    qp.eq_rhs = Eigen::Map<const Eigen::VectorXd>(eq_rhs_.data(), static_cast<int>(eq_rhs_.size()));
    qp.ineq_matrix.resize(static_cast<int>(in_rhs_.size()), n_);
    qp.ineq_matrix.setFromTriplets(in_.begin(), in_.end());
    qp.ineq_rhs = Eigen::Map<const Eigen::VectorXd>(in_rhs_.data(), static_cast<int>(in_rhs_.size()));
    qp.lower = lower_;
    qp.upper = upper_;
    return qp;
  }

 private:
  int n_;
  std::vector<Triplet> P_, eq_, in_;
  Eigen::VectorXd q_;
  double constant_ = 0.0;
  std::vector<double> eq_rhs_, in_rhs_;
  Eigen::VectorXd lower_, upper_;
};

void require_same_dims(const LinearizedProblem& lin, const Trajectory& z, const char* what) {
  if (!z.same_shape(lin.reference)) {
    throw DimensionError(fmt::format("{}: trajectory ({}, {}, {}) does not match problem ({}, {}, {})",
                                     what, z.nx(), z.nu(), z.K(), lin.dims.nx, lin.dims.nu,
                                     lin.dims.K));
  }
}

// Z^c as bounds and affine rows, plus u_K = 0.
void add_convex_sets(const LinearizedProblem& lin, const SubproblemLayout& L, QpBuilder& b) {
  const Dims& d = lin.dims;
  for (int k = 0; k <= d.K; ++k) {
    const ConvexSet& s = lin.convex_sets[k];
    for (int i = 0; i < d.nz(); ++i) b.bound(L.z_index(k, i), s.lower[i], s.upper[i]);
    for (Eigen::Index r = 0; r < s.eq_matrix.rows(); ++r) {
      const int row = b.new_eq_row(s.eq_rhs[r]);
      for (int i = 0; i < d.nz(); ++i) {
        if (s.eq_matrix(r, i) != 0.0) b.eq_coef(row, L.z_index(k, i), s.eq_matrix(r, i));
      }
    }
  }
  for (int i = d.nx; i < d.nz(); ++i) b.bound(L.z_index(d.K, i), 0.0, 0.0);
}

// Linear or convex-quadratic cost models of every term.
void add_costs(const LinearizedProblem& lin, const SubproblemLayout& L, QpBuilder& b) {
  const Dims& d = lin.dims;
  for (std::size_t t = 0; t < lin.costs.size(); ++t) {
    for (int k = 0; k <= d.K; ++k) {
      const bool applies = lin.cost_is_terminal[t] ? k == d.K : k < d.K;
      if (!applies) continue;
      const CostModel& m = lin.costs[t][k];
      const Eigen::VectorXd ref = lin.reference.z(k);
      Eigen::VectorXd lin_term = m.gradient;
      double c = m.value - m.gradient.dot(ref);
      if (m.hessian.size() > 0) {
        lin_term -= m.hessian * ref;
        c += 0.5 * ref.dot(m.hessian * ref);
        for (int i = 0; i < d.nz(); ++i) {
          for (int j = 0; j < d.nz(); ++j) {
            if (m.hessian(i, j) != 0.0) b.add_hessian(L.z_index(k, i), L.z_index(k, j), m.hessian(i, j));
          }
        }
      }
      for (int i = 0; i < d.nz(); ++i) b.add_linear(L.z_index(k, i), lin_term[i]);
      b.add_constant(c);
    }
  }
}

// |r(z)| <= t as two rows, where r(z) = J z - c is affine in z_k (and
// optionally +x_{k+1} for dynamics defects).
void add_abs_rows(QpBuilder& b, const SubproblemLayout& L, int k, const Eigen::RowVectorXd& jac,
                  double rhs, int slack, int next_state = -1) {
  for (double sign : {1.0, -1.0}) {
    const int row = b.new_ineq_row(sign * rhs);
    for (int i = 0; i < jac.size(); ++i) {
      if (jac[i] != 0.0) b.ineq_coef(row, L.z_index(k, i), sign * jac[i]);
    }
    if (next_state >= 0) b.ineq_coef(row, next_state, sign);
    b.ineq_coef(row, slack, -1.0);
  }
}

// Penalty terms of Theta with slack variables.
void add_penalties(const LinearizedProblem& lin, const PenaltyWeights& w, const SubproblemLayout& L,
                   QpBuilder& b) {
  const Dims& d = lin.dims;
  for (int k = 0; k < d.K; ++k) {
    const VectorModel& m = lin.dynamics[k];
    const Eigen::VectorXd offset = m.value - m.jacobian * lin.reference.z(k);
    for (int r = 0; r < d.nx; ++r) {
      const int slack = L.offset_dyn() + k * d.nx + r;
      // x_{k+1,r} - J_r z_k - offset_r
      add_abs_rows(b, L, k, -m.jacobian.row(r), offset[r], slack, L.z_index(k + 1, r));
      b.add_linear(slack, w.w1);
      b.bound(slack, 0.0, kInf);
    }
  }
  for (int k = 0; k <= d.K; ++k) {
    const Eigen::VectorXd ref = lin.reference.z(k);
    if (d.ng > 0) {
      const VectorModel& m = lin.inequality[k];
      const Eigen::VectorXd offset = m.value - m.jacobian * ref;
      for (int r = 0; r < d.ng; ++r) {
        const int slack = L.offset_g() + k * d.ng + r;
        if (w.inequality == InequalityPenalty::absolute) {
          add_abs_rows(b, L, k, m.jacobian.row(r), -offset[r], slack);
        } else {
          const int row = b.new_ineq_row(-offset[r]);
          for (int i = 0; i < d.nz(); ++i) {
            if (m.jacobian(r, i) != 0.0) b.ineq_coef(row, L.z_index(k, i), m.jacobian(r, i));
          }
          b.ineq_coef(row, slack, -1.0);
        }
        b.add_linear(slack, w.w2);
        b.bound(slack, 0.0, kInf);
      }
    }
    if (d.nh > 0) {
      const VectorModel& m = lin.equality[k];
      const Eigen::VectorXd offset = m.value - m.jacobian * ref;
      for (int r = 0; r < d.nh; ++r) {
        const int slack = L.offset_h() + k * d.nh + r;
        add_abs_rows(b, L, k, m.jacobian.row(r), -offset[r], slack);
        b.add_linear(slack, w.w3);
        b.bound(slack, 0.0, kInf);
      }
    }
  }
}

// (1/2) sum_i weight_i (z_i - center_i)^2 over the stacked trajectory.
void add_weighted_prox(const Eigen::VectorXd& weight, const Eigen::VectorXd& center, QpBuilder& b) {
  for (Eigen::Index i = 0; i < center.size(); ++i) {
    if (weight[i] == 0.0) continue;
    b.add_hessian(static_cast<int>(i), static_cast<int>(i), weight[i]);
    b.add_linear(static_cast<int>(i), -weight[i] * center[i]);
    b.add_constant(0.5 * weight[i] * center[i] * center[i]);
  }
}

QpBuilder penalized_builder(const LinearizedProblem& lin, const PenaltyWeights& weights) {
  SubproblemLayout L{lin.dims, weights.inequality};
  QpBuilder b(L.num_variables());
  add_costs(lin, L, b);
  add_penalties(lin, weights, L, b);
  add_convex_sets(lin, L, b);
  return b;
}

}  // namespace

Eigen::VectorXd mask_weights(const ConsensusMask& mask, const Dims& dims) {
  const int nz = dims.nz();
  if (!mask.empty() && static_cast<int>(mask.size()) != nz) {
    throw DimensionError(fmt::format("consensus mask has {} entries, expected {}", mask.size(), nz));
  }
  Eigen::VectorXd w(nz * (dims.K + 1));
  for (int k = 0; k <= dims.K; ++k) {
    for (int i = 0; i < nz; ++i) w[k * nz + i] = (mask.empty() || mask[i]) ? 1.0 : kUnmaskedWeight;
  }
  return w;
}

QuadraticProgram build_scp_qp(const LinearizedProblem& lin, const PenaltyWeights& weights,
                              const Trajectory& prox_center) {
  require_same_dims(lin, prox_center, "build_scp_qp");
  weights.validate(false);
  QpBuilder b = penalized_builder(lin, weights);
  const Eigen::VectorXd center = prox_center.stacked();
  add_weighted_prox(Eigen::VectorXd::Constant(center.size(), weights.wp), center, b);
  return b.build();
}

QuadraticProgram build_consensus_qp(const LinearizedProblem& lin, double rho, const Trajectory& zbar,
                                    const Trajectory& dual, const PenaltyWeights& weights,
                                    const ConsensusMask& mask) {
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw std::invalid_argument(fmt::format("consensus penalty rho must be positive, got {}", rho));
  }
  require_same_dims(lin, zbar, "build_consensus_qp");
  require_same_dims(lin, dual, "build_consensus_qp");
  weights.validate(false);
  QpBuilder b = penalized_builder(lin, weights);
  const Eigen::VectorXd center = zbar.stacked() - dual.stacked();
  add_weighted_prox(rho * mask_weights(mask, lin.dims), center, b);
  return b.build();
}

SubproblemSolution solve_subproblem(const QuadraticProgram& qp, const SubproblemLayout& layout,
                                    const QpSettings& settings) {
  if (qp.num_variables() < layout.num_z()) throw DimensionError("QP smaller than its layout");
  const QpResult r = solve_qp(qp, settings);
  SubproblemSolution s;
  s.status = r.status;
  s.objective = r.objective;
  s.primal_residual = r.primal_residual;
  s.dual_residual = r.dual_residual;
  s.complementarity = r.complementarity;
  s.iterations = r.iterations;
  s.slacks = r.x.tail(qp.num_variables() - layout.num_z());
  if (r.x.allFinite()) {
    s.z = Trajectory::from_stacked(layout.dims.nx, layout.dims.nu, layout.dims.K, r.x.head(layout.num_z()));
  } else {
    s.status = QpStatus::max_iterations;
    s.z = Trajectory(layout.dims.nx, layout.dims.nu, layout.dims.K);
  }
  return s;
}

SubproblemSolution project_onto_Z(const LinearizedProblem& lin_at_mean, const Trajectory& v,
                                  const QpSettings& settings, const ConsensusMask& mask) {
  require_same_dims(lin_at_mean, v, "project_onto_Z");
  const Dims& d = lin_at_mean.dims;
  SubproblemLayout L{Dims{d.nx, d.nu, d.K, 0, 0}, InequalityPenalty::positive_part};
  QpBuilder b(L.num_z());
  add_weighted_prox(mask_weights(mask, d), v.stacked(), b);
  add_convex_sets(lin_at_mean, L, b);

  for (int k = 0; k < d.K; ++k) {
    const VectorModel& m = lin_at_mean.dynamics[k];
    const Eigen::VectorXd offset = m.value - m.jacobian * lin_at_mean.reference.z(k);
    for (int r = 0; r < d.nx; ++r) {
      const int row = b.new_eq_row(offset[r]);
      b.eq_coef(row, L.z_index(k + 1, r), 1.0);
      for (int i = 0; i < d.nz(); ++i) {
        if (m.jacobian(r, i) != 0.0) b.eq_coef(row, L.z_index(k, i), -m.jacobian(r, i));
      }
    }
  }
  for (int k = 0; k <= d.K; ++k) {
    const Eigen::VectorXd ref = lin_at_mean.reference.z(k);
    if (d.ng > 0) {
      const VectorModel& m = lin_at_mean.inequality[k];
      const Eigen::VectorXd offset = m.value - m.jacobian * ref;
      for (int r = 0; r < d.ng; ++r) {
        const int row = b.new_ineq_row(-offset[r]);
        for (int i = 0; i < d.nz(); ++i) {
          if (m.jacobian(r, i) != 0.0) b.ineq_coef(row, L.z_index(k, i), m.jacobian(r, i));
        }
      }
    }
    if (d.nh > 0) {
      const VectorModel& m = lin_at_mean.equality[k];
      const Eigen::VectorXd offset = m.value - m.jacobian * ref;
      for (int r = 0; r < d.nh; ++r) {
        const int row = b.new_eq_row(-offset[r]);
        for (int i = 0; i < d.nz(); ++i) {
          if (m.jacobian(r, i) != 0.0) b.eq_coef(row, L.z_index(k, i), m.jacobian(r, i));
        }
      }
    }
  }
  return solve_subproblem(b.build(), L, settings);
}

}  // namespace osscp
