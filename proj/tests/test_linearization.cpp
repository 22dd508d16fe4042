#include "osscp/linearization.hpp"

#include "test_problems.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace osscp;

namespace {

/// Penalized cost written out term by term, independent of the library loop.
double penalized_oracle(const ProblemDefinition& pd, const PenaltyWeights& w, const Trajectory& z) {
  const int K = pd.dims.K;
  double total = 0.0;
  for (int k = 0; k < K; ++k) {
    for (const auto& t : pd.costs)
      if (t.stage == CostTerm::Stage::running) total += t.eval(k, z.z(k)).value;
    const Eigen::VectorXd defect = z.x(k + 1) - pd.dynamics(k, z.z(k)).value;
    for (int i = 0; i < defect.size(); ++i) total += w.w1 * std::abs(defect[i]);
  }
  for (const auto& t : pd.costs)
    if (t.stage == CostTerm::Stage::terminal) total += t.eval(K, z.z(K)).value;
  for (int k = 0; k <= K; ++k) {
    if (pd.dims.ng > 0) {
      const Eigen::VectorXd g = pd.inequality(k, z.z(k)).value;
      for (int i = 0; i < g.size(); ++i) {
        total += w.w2 * (w.inequality == InequalityPenalty::absolute ? std::abs(g[i]) : std::max(g[i], 0.0));
      }
    }
    if (pd.dims.nh > 0) {
      const Eigen::VectorXd h = pd.equality(k, z.z(k)).value;
      for (int i = 0; i < h.size(); ++i) total += w.w3 * std::abs(h[i]);
    }
  }
  return total;
}

}  // namespace

TEST_CASE("models reproduce the nonlinear values at the reference") {
  std::mt19937 rng(11);
  const ProblemDefinition pd = testing::nonlinear_toy(8);
  const Trajectory ref = testing::random_trajectory(1, 1, 8, rng);
  const LinearizedProblem lin = linearize(pd, ref);
  REQUIRE(lin.dynamics.size() == 8);
  REQUIRE(lin.inequality.size() == 9);
  REQUIRE(lin.equality.size() == 9);
  for (int k = 0; k <= 8; ++k) {
    const Eigen::VectorXd zk = ref.z(k);
    if (k < 8) CHECK((lin.dynamics_at(k, zk) - pd.dynamics(k, zk).value).norm() == 0.0);
    CHECK((lin.inequality_at(k, zk) - pd.inequality(k, zk).value).norm() == 0.0);
    CHECK((lin.equality_at(k, zk) - pd.equality(k, zk).value).norm() == 0.0);
  }
}

TEST_CASE("Jacobians agree with central finite differences") {
  std::mt19937 rng(12);
  const ProblemDefinition pd = testing::nonlinear_toy(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Trajectory ref = testing::random_trajectory(1, 1, 6, rng);
    const LinearizedProblem lin = linearize(pd, ref);
    const double h = 1e-6;
    for (int k = 0; k < 6; ++k) {
      for (int j = 0; j < 2; ++j) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(2);
        e[j] = h;
        const Eigen::VectorXd zk = ref.z(k);
        const double fd_f = (pd.dynamics(k, zk + e).value[0] - pd.dynamics(k, zk - e).value[0]) / (2 * h);
        const double fd_g = (pd.inequality(k, zk + e).value[0] - pd.inequality(k, zk - e).value[0]) / (2 * h);
        CHECK(lin.dynamics[k].jacobian(0, j) == doctest::Approx(fd_f).epsilon(1e-6));
        CHECK(lin.inequality[k].jacobian(0, j) == doctest::Approx(fd_g).epsilon(1e-6));
        const double fd_c = (pd.costs[0].eval(k, zk + e).value - pd.costs[0].eval(k, zk - e).value) / (2 * h);
        CHECK(lin.costs[0][k].gradient[j] == doctest::Approx(fd_c).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("linear models are first-order accurate") {
  std::mt19937 rng(13);
  const ProblemDefinition pd = testing::nonlinear_toy(4);
  const Trajectory ref = testing::random_trajectory(1, 1, 4, rng);
  const LinearizedProblem lin = linearize(pd, ref);
  const Eigen::Vector2d d(0.7, -0.3);
  double prev = 0.0;
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    const Eigen::VectorXd zk = ref.z(2) + eps * d;
    const double err = std::abs(pd.dynamics(2, zk).value[0] - lin.dynamics_at(2, zk)[0]);
    if (prev > 0) CHECK(err < prev * 0.02);
    prev = err;
  }
}

TEST_CASE("convex cost terms are carried exactly") {
  testing::DoubleIntegrator di;
  const ProblemDefinition pd = di.problem();
  std::mt19937 rng(14);
  const Trajectory ref = testing::random_trajectory(2, 1, di.K, rng);
  const Trajectory other = testing::random_trajectory(2, 1, di.K, rng);
  const LinearizedProblem lin = linearize(pd, ref);
  for (int k = 0; k <= di.K; ++k) {
    double expected = 0.0;
    for (const auto& t : pd.costs) {
      const bool terminal = t.stage == CostTerm::Stage::terminal;
      if (terminal == (k == di.K)) expected += t.eval(k, other.z(k)).value;
    }
    CHECK(lin.cost_at(k, other.z(k)) == doctest::Approx(expected).epsilon(1e-12));
  }
  // Linear dynamics make the penalized model exact everywhere.
  const PenaltyWeights w;
  CHECK(penalized_linear_cost(lin, w, other).total ==
        doctest::Approx(true_penalized_cost(pd, w, other).total).epsilon(1e-12));
}

TEST_CASE("penalized cost matches the term-by-term oracle") {
  std::mt19937 rng(15);
  const ProblemDefinition pd = testing::nonlinear_toy(7);
  for (auto mode : {InequalityPenalty::positive_part, InequalityPenalty::absolute}) {
    PenaltyWeights w{3.0, 5.0, 7.0, 1.0, mode};
    for (int trial = 0; trial < 25; ++trial) {
      const Trajectory z = testing::random_trajectory(1, 1, 7, rng, 2.0);
      const double oracle = penalized_oracle(pd, w, z);
      CHECK(true_penalized_cost(pd, w, z).total == doctest::Approx(oracle).epsilon(1e-12));
      const LinearizedProblem lin = linearize(pd, z);
      CHECK(penalized_linear_cost(lin, w, z).total == doctest::Approx(oracle).epsilon(1e-12));
    }
  }
}

TEST_CASE("penalized cost is monotone in the penalty weights") {
  std::mt19937 rng(16);
  const ProblemDefinition pd = testing::nonlinear_toy(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Trajectory z = testing::random_trajectory(1, 1, 5, rng, 2.0);
    PenaltyWeights lo{1.0, 1.0, 1.0, 1.0};
    double prev = true_penalized_cost(pd, lo, z).total;
    for (double s : {2.0, 5.0, 50.0}) {
      PenaltyWeights hi{s, s, s, 1.0};
      const double c = true_penalized_cost(pd, hi, z).total;
      CHECK(c >= prev - 1e-12);
      prev = c;
    }
  }
}

TEST_CASE("absolute inequality penalty dominates the positive part") {
  std::mt19937 rng(17);
  const ProblemDefinition pd = testing::nonlinear_toy(5);
  const Trajectory z = testing::random_trajectory(1, 1, 5, rng, 0.5);
  PenaltyWeights pos{1, 1, 1, 1, InequalityPenalty::positive_part};
  PenaltyWeights abs{1, 1, 1, 1, InequalityPenalty::absolute};
  // |x| <= 2 at every knot, so g < 0 and only the absolute form charges it.
  CHECK(true_penalized_cost(pd, pos, z).inequality == 0.0);
  CHECK(true_penalized_cost(pd, abs, z).inequality > 0.0);
}

TEST_CASE("convex set membership is reported") {
  testing::DoubleIntegrator di;
  di.a_max = 1.0;
  const ProblemDefinition pd = di.problem();
  Trajectory z(2, 1, di.K);
  CHECK(true_penalized_cost(pd, {}, z).in_convex_set);
  z.set_z(3, Eigen::Vector3d(0, 0, 2.0));
  CHECK_FALSE(true_penalized_cost(pd, {}, z).in_convex_set);
  Trajectory moved(2, 1, di.K);
  moved.set_z(0, Eigen::Vector3d(0.1, 0, 0));
  CHECK_FALSE(true_penalized_cost(pd, {}, moved).in_convex_set);
}

TEST_CASE("callbacks with wrong shapes or non-finite output are rejected") {
  ProblemDefinition pd = testing::nonlinear_toy(3);
  CHECK_THROWS_AS(linearize(pd, Trajectory(2, 1, 3)), DimensionError);
  auto bad = pd;
  bad.dynamics = [](int, const Eigen::VectorXd&) {
    return VectorModel{Eigen::VectorXd::Constant(1, std::nan("")), Eigen::RowVector2d(1, 0)};
  };
  CHECK_THROWS_AS(linearize(bad, Trajectory(1, 1, 3)), NonFiniteError);
  bad.dynamics = [](int, const Eigen::VectorXd&) {
    return VectorModel{Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Zero(2, 2)};
  };
  CHECK_THROWS_AS(linearize(bad, Trajectory(1, 1, 3)), DimensionError);
}
