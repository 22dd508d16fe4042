#include "osscp/linearization.hpp"

#include <fmt/format.h>

#include <cmath>

namespace osscp {
namespace {

bool term_applies(bool terminal, int k, int K) { return terminal ? k == K : k < K; }

void check_model(const VectorModel& m, int rows, int nz, const char* what, int k) {
  if (m.value.size() != rows || m.jacobian.rows() != rows || m.jacobian.cols() != nz) {
    throw DimensionError(fmt::format("{} at k={}: got value {} and jacobian {}x{}, expected {} and {}x{}",
                                     what, k, m.value.size(), m.jacobian.rows(), m.jacobian.cols(),
                                     rows, rows, nz));
  }
  if (!m.value.allFinite() || !m.jacobian.allFinite()) {
    throw NonFiniteError(fmt::format("{} returned non-finite data at k={}", what, k));
  }
}

VectorModel empty_model(int nz) { return {Eigen::VectorXd(0), Eigen::MatrixXd(0, nz)}; }

double inequality_penalty(const Eigen::VectorXd& g, InequalityPenalty mode) {
  if (mode == InequalityPenalty::absolute) return g.cwiseAbs().sum();
  return g.cwiseMax(0.0).sum();
}

}  // namespace

Eigen::VectorXd LinearizedProblem::dynamics_at(int k, const Eigen::VectorXd& zk) const {
  const auto& m = dynamics.at(k);
  return m.value + m.jacobian * (zk - reference.z(k));
}

Eigen::VectorXd LinearizedProblem::inequality_at(int k, const Eigen::VectorXd& zk) const {
  const auto& m = inequality.at(k);
  return m.value + m.jacobian * (zk - reference.z(k));
}

Eigen::VectorXd LinearizedProblem::equality_at(int k, const Eigen::VectorXd& zk) const {
  const auto& m = equality.at(k);
  return m.value + m.jacobian * (zk - reference.z(k));
}

double LinearizedProblem::cost_at(int k, const Eigen::VectorXd& zk) const {
  double total = 0.0;
  const Eigen::VectorXd d = zk - reference.z(k);
  for (std::size_t t = 0; t < costs.size(); ++t) {
    if (!term_applies(cost_is_terminal[t], k, dims.K)) continue;
    const CostModel& m = costs[t][k];
    total += m.value + m.gradient.dot(d);
    if (m.hessian.size() > 0) total += 0.5 * d.dot(m.hessian * d);
  }
  return total;
}

LinearizedProblem linearize(const ProblemDefinition& problem, const Trajectory& ref) {
  problem.validate();
  problem.require_matches(ref);
  const Dims& d = problem.dims;
  const int nz = d.nz();

  LinearizedProblem lin;
  lin.dims = d;
  lin.reference = ref;
  lin.convex_sets = problem.convex_sets;
  lin.dynamics.reserve(d.K);
  lin.inequality.reserve(d.K + 1);
  lin.equality.reserve(d.K + 1);

  for (int k = 0; k < d.K; ++k) {
    VectorModel m = problem.dynamics(k, ref.z(k));
    check_model(m, d.nx, nz, "dynamics", k);
    lin.dynamics.push_back(std::move(m));
  }
  for (int k = 0; k <= d.K; ++k) {
    if (d.ng > 0) {
      VectorModel m = problem.inequality(k, ref.z(k));
      check_model(m, d.ng, nz, "inequality", k);
      lin.inequality.push_back(std::move(m));
    } else {
      lin.inequality.push_back(empty_model(nz));
    }
    if (d.nh > 0) {
      VectorModel m = problem.equality(k, ref.z(k));
      check_model(m, d.nh, nz, "equality", k);
      lin.equality.push_back(std::move(m));
    } else {
      lin.equality.push_back(empty_model(nz));
    }
  }

  for (const CostTerm& term : problem.costs) {
    const bool terminal = term.stage == CostTerm::Stage::terminal;
    std::vector<CostModel> models(d.K + 1);
    for (int k = 0; k <= d.K; ++k) {
      if (!term_applies(terminal, k, d.K)) continue;
      ScalarModel s = term.eval(k, ref.z(k));
      if (s.gradient.size() != nz) {
        throw DimensionError(fmt::format("cost '{}' gradient has {} entries, expected {}",
                                         term.name, s.gradient.size(), nz));
      }
      if (!std::isfinite(s.value) || !s.gradient.allFinite()) {
        throw NonFiniteError(fmt::format("cost '{}' returned non-finite data at k={}", term.name, k));
      }
      models[k].value = s.value;
      models[k].gradient = std::move(s.gradient);
      if (term.convex) {
        models[k].hessian = term.hessian(k);
        if (models[k].hessian.rows() != nz || models[k].hessian.cols() != nz) {
          throw DimensionError(fmt::format("cost '{}' Hessian is not {}x{}", term.name, nz, nz));
        }
      }
    }
    lin.costs.push_back(std::move(models));
    lin.cost_is_terminal.push_back(terminal);
  }
  return lin;
}

PenalizedCost penalized_linear_cost(const LinearizedProblem& lin, const PenaltyWeights& weights,
                                    const Trajectory& z, double set_tol) {
  const Dims& d = lin.dims;
  if (!z.same_shape(lin.reference)) throw DimensionError("penalized_linear_cost: shape mismatch");

  PenalizedCost out;
  out.in_convex_set = true;
  for (int k = 0; k <= d.K; ++k) {
    const Eigen::VectorXd zk = z.z(k);
    out.cost += lin.cost_at(k, zk);
    if (k < d.K) out.dynamics += (z.x(k + 1) - lin.dynamics_at(k, zk)).cwiseAbs().sum();
    if (d.ng > 0) out.inequality += inequality_penalty(lin.inequality_at(k, zk), weights.inequality);
    if (d.nh > 0) out.equality += lin.equality_at(k, zk).cwiseAbs().sum();
    if (!lin.convex_sets[k].contains(zk, set_tol)) out.in_convex_set = false;
  }
  out.total = out.cost + weights.w1 * out.dynamics + weights.w2 * out.inequality +
              weights.w3 * out.equality;
  return out;
}

PenalizedCost true_penalized_cost(const ProblemDefinition& problem, const PenaltyWeights& weights,
                                  const Trajectory& z, double set_tol) {
  problem.require_matches(z);
  const Dims& d = problem.dims;

  PenalizedCost out;
  out.in_convex_set = true;
  for (int k = 0; k <= d.K; ++k) {
    const Eigen::VectorXd zk = z.z(k);
    for (const CostTerm& term : problem.costs) {
      if (term_applies(term.stage == CostTerm::Stage::terminal, k, d.K)) out.cost += term.eval(k, zk).value;
    }
    if (k < d.K) out.dynamics += (z.x(k + 1) - problem.dynamics(k, zk).value).cwiseAbs().sum();
    if (d.ng > 0) out.inequality += inequality_penalty(problem.inequality(k, zk).value, weights.inequality);
    if (d.nh > 0) out.equality += problem.equality(k, zk).value.cwiseAbs().sum();
    if (!problem.convex_sets[k].contains(zk, set_tol)) out.in_convex_set = false;
  }
  out.total = out.cost + weights.w1 * out.dynamics + weights.w2 * out.inequality +
              weights.w3 * out.equality;
  if (!std::isfinite(out.total)) throw NonFiniteError("true penalized cost is not finite");
  return out;
}

Trajectory mean(const std::vector<Trajectory>& trajectories) {
  if (trajectories.empty()) throw std::invalid_argument("mean of an empty trajectory list");
  Trajectory acc = trajectories.front();
  for (std::size_t i = 1; i < trajectories.size(); ++i) acc += trajectories[i];
  acc *= 1.0 / static_cast<double>(trajectories.size());
  return acc;
}

}  // namespace osscp
