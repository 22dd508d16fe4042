#include "osscp/problem.hpp"

#include <fmt/format.h>

#include <stdexcept>

namespace osscp {

ConvexSet ConvexSet::unbounded(int nz) {
  ConvexSet s;
  s.lower = Eigen::VectorXd::Constant(nz, -kInf);
  s.upper = Eigen::VectorXd::Constant(nz, kInf);
  s.eq_matrix = Eigen::MatrixXd(0, nz);
  s.eq_rhs = Eigen::VectorXd(0);
  return s;
}

bool ConvexSet::contains(const Eigen::VectorXd& zk, double tol) const {
  for (Eigen::Index i = 0; i < zk.size(); ++i) {
    if (zk[i] < lower[i] - tol || zk[i] > upper[i] + tol) return false;
  }
  if (eq_matrix.rows() > 0 && (eq_matrix * zk - eq_rhs).cwiseAbs().maxCoeff() > tol) return false;
  return true;
}

void ProblemDefinition::validate() const {
  const int nz = dims.nz();
  if (dims.nx < 1 || dims.nu < 0 || dims.K < 1 || dims.ng < 0 || dims.nh < 0) {
    throw DimensionError(fmt::format("invalid dims nx={} nu={} K={} ng={} nh={}", dims.nx,
                                     dims.nu, dims.K, dims.ng, dims.nh));
  }
  if (!dynamics) throw std::invalid_argument("problem has no dynamics callback");
  if (dims.ng > 0 && !inequality) throw std::invalid_argument("ng > 0 but no inequality callback");
  if (dims.nh > 0 && !equality) throw std::invalid_argument("nh > 0 but no equality callback");
  if (static_cast<int>(convex_sets.size()) != dims.K + 1) {
    throw DimensionError(
        fmt::format("expected {} convex sets, got {}", dims.K + 1, convex_sets.size()));
  }
  for (const auto& s : convex_sets) {
    if (s.lower.size() != nz || s.upper.size() != nz || s.eq_matrix.cols() != nz ||
        s.eq_matrix.rows() != s.eq_rhs.size()) {
      throw DimensionError("convex set shape does not match nz");
    }
    if ((s.lower.array() > s.upper.array()).any()) {
      throw std::invalid_argument("convex set has lower bound above upper bound");
    }
  }
  for (const auto& c : costs) {
    if (!c.eval) throw std::invalid_argument(fmt::format("cost term '{}' has no evaluator", c.name));
    if (c.convex && !c.hessian) {
      throw std::invalid_argument(fmt::format("convex cost term '{}' needs a Hessian", c.name));
    }
  }
}

void ProblemDefinition::require_matches(const Trajectory& z) const {
  if (z.nx() != dims.nx || z.nu() != dims.nu || z.K() != dims.K) {
    throw DimensionError(fmt::format("trajectory dims ({}, {}, {}) do not match problem ({}, {}, {})",
                                     z.nx(), z.nu(), z.K(), dims.nx, dims.nu, dims.K));
  }
}

void PenaltyWeights::validate(bool require_positive) const {
  if (w1 < 0 || w2 < 0 || w3 < 0 || wp < 0) {
    throw std::invalid_argument("penalty weights must be nonnegative");
  }
  if (require_positive && (w1 <= 0 || w2 <= 0 || w3 <= 0)) {
    throw std::invalid_argument("w1, w2, w3 must be strictly positive in a solve");
  }
}

std::string to_string(InequalityPenalty p) {
  return p == InequalityPenalty::absolute ? "absolute" : "positive_part";
}

InequalityPenalty inequality_penalty_from_string(const std::string& s) {
  if (s == "absolute") return InequalityPenalty::absolute;
  if (s == "positive_part") return InequalityPenalty::positive_part;
  throw std::invalid_argument(fmt::format("unknown inequality penalty '{}'", s));
}

}  // namespace osscp
