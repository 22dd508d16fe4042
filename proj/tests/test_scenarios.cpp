#include "osscp/scenarios.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace osscp;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::VectorXd random_point(std::mt19937& rng) {
  std::uniform_real_distribution<double> pos(-2.0, 12.0), ang(-4.0, 4.0), ctl(-3.0, 3.0);
  return Eigen::Vector4d(pos(rng), pos(rng) - 5.0, ang(rng), ctl(rng));
}

template <class F>
Eigen::VectorXd fd_gradient(F f, const Eigen::VectorXd& z, double h = 1e-6) {
  Eigen::VectorXd g(z.size());
  for (int i = 0; i < z.size(); ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(z.size());
    e[i] = h;
    g[i] = (f(z + e) - f(z - e)) / (2 * h);
  }
  return g;
}

}  // namespace

TEST_CASE("unicycle dynamics examples") {
  UnicycleParams p;
  p.v = 2.0;
  p.dt = 0.5;
  const VectorModel a = unicycle_dynamics(p, Eigen::Vector4d(1, 2, 0, 0.4));
  CHECK(a.value[0] == doctest::Approx(2.0));
  CHECK(a.value[1] == doctest::Approx(2.0));
  CHECK(a.value[2] == doctest::Approx(0.2));
  const VectorModel b = unicycle_dynamics(p, Eigen::Vector4d(0, 0, kPi / 2, -1));
  CHECK(b.value[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(b.value[1] == doctest::Approx(1.0));
  CHECK(b.value[2] == doctest::Approx(kPi / 2 - 0.5));
  CHECK_THROWS_AS(unicycle_dynamics(p, Eigen::Vector3d::Zero()), DimensionError);
}

TEST_CASE("obstacle constraint examples") {
  const Obstacle o{{5.0, 0.0}, 1.0};
  const ScalarModel out = obstacle_constraint(o, Eigen::Vector4d(7, 0, 0, 0));
  CHECK(out.value == doctest::Approx(-1.0));
  CHECK(out.gradient[0] == doctest::Approx(-1.0));
  CHECK(out.gradient[1] == doctest::Approx(0.0));
  const ScalarModel in = obstacle_constraint(o, Eigen::Vector4d(5, 0.5, 0, 0));
  CHECK(in.value == doctest::Approx(0.5));
  CHECK(in.gradient[1] == doctest::Approx(-1.0));
  // At the center the gradient falls back to a fixed unit direction.
  const ScalarModel c = obstacle_constraint(o, Eigen::Vector4d(5, 0, 0, 0));
  CHECK(c.value == doctest::Approx(1.0));
  CHECK(c.gradient.head<2>().norm() == doctest::Approx(1.0));
}

TEST_CASE("terrain field examples") {
  TerrainField f;
  CHECK(f.empty());
  CHECK(f.value(Eigen::Vector2d(1, 2)) == 0.0);
  const Eigen::Matrix2d cov = Eigen::Vector2d(4.0, 1.0).asDiagonal();
  f.add({1.0, 1.0}, cov, 3.0);
  Eigen::Vector2d g;
  CHECK(f.value(Eigen::Vector2d(1, 1), &g) == doctest::Approx(3.0));
  CHECK(g.norm() < 1e-15);
  // One standard deviation along the first axis.
  CHECK(f.value(Eigen::Vector2d(3, 1)) == doctest::Approx(3.0 * std::exp(-0.5)));
  CHECK_THROWS_AS(f.add({0, 0}, Eigen::Matrix2d::Zero(), 1.0), std::invalid_argument);
  Eigen::Matrix2d asym;
  asym << 1, 0.5, 0, 1;
  CHECK_THROWS_AS(f.add({0, 0}, asym, 1.0), std::invalid_argument);
  Eigen::Matrix2d indef;
  indef << 1, 2, 2, 1;
  CHECK_THROWS_AS(f.add({0, 0}, indef, 1.0), std::invalid_argument);
}

TEST_CASE("derivatives agree with finite differences at 100 points") {
  std::mt19937 rng(41);
  const Scenario s = build_scenario("unicycle-terrain");
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::VectorXd z = random_point(rng);
    const VectorModel dyn = unicycle_dynamics(s.params, z);
    for (int r = 0; r < 3; ++r) {
      const Eigen::VectorXd fd =
          fd_gradient([&](const Eigen::VectorXd& w) { return unicycle_dynamics(s.params, w).value[r]; }, z);
      CHECK((dyn.jacobian.row(r).transpose() - fd).cwiseAbs().maxCoeff() < 1e-7);
    }
    for (const auto& o : s.obstacles) {
      if ((z.head<2>() - o.center).norm() < 1e-3) continue;
      const Eigen::VectorXd fd =
          fd_gradient([&](const Eigen::VectorXd& w) { return obstacle_constraint(o, w).value; }, z);
      CHECK((obstacle_constraint(o, z).gradient - fd).cwiseAbs().maxCoeff() < 1e-6);
    }
    const Eigen::VectorXd fd =
        fd_gradient([&](const Eigen::VectorXd& w) { return terrain_cost(s.terrain, w).value; }, z);
    CHECK((terrain_cost(s.terrain, z).gradient - fd).cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("terrain stays within the sum of amplitudes") {
  const Scenario s = build_scenario("unicycle-terrain");
  double bound = 0.0;
  for (const auto& c : s.terrain.components()) bound += std::abs(c.amplitude);
  std::mt19937 rng(42);
  for (int trial = 0; trial < 500; ++trial) {
    const Eigen::VectorXd z = random_point(rng);
    CHECK(std::abs(s.terrain.value(z.head<2>())) <= bound);
  }
}

TEST_CASE("scenario catalogue") {
  CHECK(scenario_names() == std::vector<std::string>{"unicycle-basic", "unicycle-terrain"});
  const Scenario basic = build_scenario("unicycle-basic");
  CHECK(basic.terrain.empty());
  CHECK(basic.obstacles.size() == 3);
  CHECK(basic.problem.dims == Dims{3, 1, 40, 3, 0});
  CHECK(basic.problem.costs.size() == 2);
  CHECK(basic.guesses.size() == 3);
  const Scenario terrain = build_scenario("unicycle-terrain");
  CHECK(terrain.terrain.components().size() == 2);
  REQUIRE(terrain.problem.costs.size() == 3);
  CHECK(terrain.problem.costs[2].name == "terrain");
  CHECK_FALSE(terrain.problem.costs[2].convex);
  CHECK_THROWS_AS(build_scenario("unicycle-nope"), std::invalid_argument);
}

TEST_CASE("scenario overrides") {
  const Scenario s = build_scenario("unicycle-basic", {{"K", 20}, {"dt", 0.5}, {"goal_y", 1.0}, {"u_max", 2.0}});
  CHECK(s.params.K == 20);
  CHECK(s.problem.dims.K == 20);
  CHECK(s.params.dt == 0.5);
  CHECK(s.params.goal.y() == 1.0);
  CHECK(s.problem.convex_sets[0].upper[3] == 2.0);
  const Scenario t = build_scenario("unicycle-terrain", {{"terrain_amplitude", 0.5}, {"over_offset", 3.0}});
  CHECK(t.terrain.components()[0].amplitude == 0.5);
  CHECK(t.terrain.components()[1].amplitude == -0.5);
  CHECK(t.guesses[0].offset == 3.0);
  CHECK_THROWS_AS(build_scenario("unicycle-basic", {{"K", 2.5}}), std::invalid_argument);
  CHECK_THROWS_AS(build_scenario("unicycle-basic", {{"dt", 0.0}}), std::invalid_argument);
  CHECK_THROWS_AS(build_scenario("unicycle-basic", {{"bogus", 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(build_scenario("unicycle-basic", {{"u_max", -1.0}}), std::invalid_argument);
}

TEST_CASE("guesses connect start and goal with consistent headings") {
  const Scenario s = build_scenario("unicycle-basic");
  std::vector<GuessSpec> specs = s.guesses;
  specs.push_back(s.lower_corridor_guess);
  specs.push_back(GuessSpec{"wp", GuessKind::waypoints, 0.0, {{3.0, 2.0}, {7.0, -2.0}}});
  const UnicycleParams& p = s.params;
  for (const auto& spec : specs) {
    CAPTURE(spec.name);
    const Trajectory z = make_guess(spec, p);
    CHECK(z.K() == p.K);
    CHECK((z.x(0).head<2>() - p.start.head<2>()).norm() < 1e-12);
    CHECK((z.x(p.K).head<2>() - p.goal).norm() < 1e-12);
    CHECK(z.u(p.K)[0] == 0.0);
    for (int k = 0; k < p.K; ++k) {
      const Eigen::Vector2d d = z.x(k + 1).head<2>() - z.x(k).head<2>();
      CHECK(std::cos(z.x(k)[2] - std::atan2(d.y(), d.x())) == doctest::Approx(1.0));
      // Controls reproduce the heading sequence.
      const double next = k + 1 < p.K ? z.x(k + 1)[2] : z.x(k)[2];
      CHECK(z.x(k)[2] + p.dt * z.u(k)[0] == doctest::Approx(next));
    }
  }
}

TEST_CASE("guess points are evenly spaced along the path") {
  const Scenario s = build_scenario("unicycle-basic");
  for (const auto& spec : {s.guesses[0], s.guesses[1], s.lower_corridor_guess}) {
    CAPTURE(spec.name);
    const Trajectory z = make_guess(spec, s.params);
    const double first = (z.x(1).head<2>() - z.x(0).head<2>()).norm();
    for (int k = 1; k < s.params.K; ++k) {
      CHECK((z.x(k + 1).head<2>() - z.x(k).head<2>()).norm() == doctest::Approx(first).epsilon(2e-3));
    }
  }
}

TEST_CASE("over and under arcs are mirror images") {
  UnicycleParams p;
  p.goal = Eigen::Vector2d(8.0, 3.0);
  p.start = Eigen::Vector3d(1.0, -1.0, 0.3);
  const Trajectory over = make_guess(GuessSpec{"o", GuessKind::over, 2.5, {}}, p);
  const Trajectory under = make_guess(GuessSpec{"u", GuessKind::under, 2.5, {}}, p);
  for (int k = 0; k <= p.K; ++k) {
    const Eigen::Vector2d po = over.x(k).head<2>(), pu = under.x(k).head<2>();
    CHECK(lateral_offset(p, po) == doctest::Approx(-lateral_offset(p, pu)).epsilon(1e-12));
    CHECK(lateral_offset(p, po) >= -1e-12);
    // Same progress along the start-goal axis.
    const Eigen::Vector2d axis = (p.goal - p.start.head<2>()).normalized();
    CHECK((po - pu).dot(axis) == doctest::Approx(0.0).scale(1.0));
  }
  CHECK(lateral_offset(p, over.x(p.K / 2).head<2>()) == doctest::Approx(2.5).epsilon(1e-2));
}

TEST_CASE("default guesses fall in distinct homotopy classes") {
  const Scenario s = build_scenario("unicycle-basic");
  CHECK(homotopy_class(make_guess(s.guesses[0], s.params), s.obstacles) == 3);
  CHECK(homotopy_class(make_guess(s.guesses[1], s.params), s.obstacles) == 2);
  CHECK(homotopy_class(make_guess(s.guesses[2], s.params), s.obstacles) == 0);
  CHECK(homotopy_class(make_guess(s.lower_corridor_guess, s.params), s.obstacles) == 1);
  Trajectory stay(3, 1, 40);
  CHECK(homotopy_class(stay, s.obstacles) == -1);
}

TEST_CASE("guess kind names round-trip") {
  for (auto k : {GuessKind::over, GuessKind::straight, GuessKind::under, GuessKind::lower_corridor,
                 GuessKind::waypoints}) {
    CHECK(guess_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(guess_kind_from_string("sideways"), std::invalid_argument);
}
