#include "osscp/scenarios.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace osscp {
namespace {

constexpr double kCenterEps = 1e-9;

// Start-goal frame: origin at the start, first axis toward the goal.
struct Frame {
  Eigen::Vector2d origin;
  Eigen::Vector2d e1;
  Eigen::Vector2d e2;
  double length = 0.0;
  double angle = 0.0;

  explicit Frame(const UnicycleParams& p) : origin(p.start.head<2>()) {
    const Eigen::Vector2d d = p.goal - origin;
    length = d.norm();
    angle = length > 0 ? std::atan2(d.y(), d.x()) : p.start.z();
    e1 = Eigen::Vector2d(std::cos(angle), std::sin(angle));
    e2 = Eigen::Vector2d(-e1.y(), e1.x());
  }
  Eigen::Vector2d to_world(const Eigen::Vector2d& local) const {
    return origin + local.x() * e1 + local.y() * e2;
  }
  Eigen::Vector2d to_local(const Eigen::Vector2d& world) const {
    const Eigen::Vector2d d = world - origin;
    return {d.dot(e1), d.dot(e2)};
  }
};

// Local positions of a circular arc from (0, 0) to (L, 0) through (L/2, h).
Eigen::MatrixXd arc_points(double L, double h, int K) {
  Eigen::MatrixXd pts(2, K + 1);
  const double a = std::abs(h);
  const double yc = (a * a - 0.25 * L * L) / (2.0 * a);
  const double R = a - yc;
  const double a0 = std::atan2(-yc, -0.5 * L);
  double a1 = std::atan2(-yc, 0.5 * L);
  if (a1 > a0) a1 -= 2.0 * std::numbers::pi;
  for (int k = 0; k <= K; ++k) {
    const double ang = a0 + (a1 - a0) * static_cast<double>(k) / K;
    pts(0, k) = 0.5 * L + R * std::cos(ang);
    pts(1, k) = yc + R * std::sin(ang);
  }
  pts(0, 0) = 0.0;
  pts(1, 0) = 0.0;
  pts(0, K) = L;
  pts(1, K) = 0.0;
  if (h < 0) pts.row(1) = -pts.row(1);
  return pts;
}

// Resamples a dense polyline at K + 1 points equally spaced in length.
Eigen::MatrixXd resample(const Eigen::MatrixXd& dense, int K) {
  const Eigen::Index n = dense.cols();
  std::vector<double> s(n, 0.0);
  for (Eigen::Index i = 1; i < n; ++i) s[i] = s[i - 1] + (dense.col(i) - dense.col(i - 1)).norm();
  Eigen::MatrixXd out(2, K + 1);
  if (s.back() <= 0.0) {
    for (int k = 0; k <= K; ++k) out.col(k) = dense.col(0);
    return out;
  }
  Eigen::Index seg = 1;
  for (int k = 0; k <= K; ++k) {
    const double target = s.back() * static_cast<double>(k) / K;
    while (seg < n - 1 && s[seg] < target) ++seg;
    const double span = s[seg] - s[seg - 1];
    const double t = span > 0 ? (target - s[seg - 1]) / span : 0.0;
    out.col(k) = (1.0 - t) * dense.col(seg - 1) + t * dense.col(seg);
  }
  out.col(0) = dense.col(0);
  out.col(K) = dense.col(n - 1);
  return out;
}

// Trajectory from local positions: headings along the path, unwrapped, and
// yaw rates from heading differences.
Trajectory from_local_path(const Eigen::MatrixXd& local, const Frame& frame, const UnicycleParams& p) {
  const int K = p.K;
  Eigen::VectorXd theta(K + 1);
  for (int k = 0; k < K; ++k) {
    const Eigen::Vector2d d = local.col(k + 1) - local.col(k);
    theta[k] = d.squaredNorm() > 0 ? std::atan2(d.y(), d.x()) : (k > 0 ? theta[k - 1] : 0.0);
    if (k > 0) {
      while (theta[k] - theta[k - 1] > std::numbers::pi) theta[k] -= 2.0 * std::numbers::pi;
      while (theta[k] - theta[k - 1] < -std::numbers::pi) theta[k] += 2.0 * std::numbers::pi;
    }
  }
  theta[K] = theta[K - 1];
  Eigen::MatrixXd pts = Eigen::MatrixXd::Zero(kUnicycleNx + kUnicycleNu, K + 1);
  for (int k = 0; k <= K; ++k) {
    pts.block<2, 1>(0, k) = frame.to_world(local.col(k));
    pts(2, k) = frame.angle + theta[k];
    if (k < K) pts(3, k) = 0.0;
  }
  for (int k = 0; k < K; ++k) pts(3, k) = (theta[k + 1] - theta[k]) / p.dt;
  return Trajectory(kUnicycleNx, kUnicycleNu, pts);
}

std::vector<Obstacle> default_obstacles() {
  return {Obstacle{{5.0, 3.0}, 1.0}, Obstacle{{5.0, -0.1}, 0.8}, Obstacle{{5.0, -3.0}, 1.0}};
}

// Lateral offset of the lower corridor midpoint.
constexpr double kLowerCorridor = -1.45;
constexpr double kUpperCorridor = 1.35;

void apply_override(Scenario& s, const std::string& key, double v) {
  auto require = [&](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(fmt::format("override '{}' = {}: {}", key, v, what));
  };
  require(std::isfinite(v) || key == "u_max", "must be finite");
  UnicycleParams& p = s.params;
  if (key == "v") {
    p.v = v;
  } else if (key == "dt") {
    p.dt = v;
  } else if (key == "K") {
    require(v >= 1 && v == std::floor(v) && v <= 100000, "must be a positive integer");
    p.K = static_cast<int>(v);
  } else if (key == "q") {
    p.q = v;
  } else if (key == "u_max") {
    require(v > 0, "must be positive");
    p.u_max = v;
  } else if (key == "start_x") {
    p.start.x() = v;
  } else if (key == "start_y") {
    p.start.y() = v;
  } else if (key == "start_theta") {
    p.start.z() = v;
  } else if (key == "goal_x") {
    p.goal.x() = v;
  } else if (key == "goal_y") {
    p.goal.y() = v;
  } else if (key == "over_offset" || key == "under_offset") {
    const std::string name = key == "over_offset" ? "over" : "under";
    for (auto& g : s.guesses) {
      if (g.name == name) g.offset = v;
    }
  } else if (key == "lower_offset") {
    s.lower_corridor_guess.offset = v;
  } else if (key == "terrain_amplitude") {
    require(v >= 0, "must be nonnegative");
    TerrainField scaled;
    for (const auto& c : s.terrain.components()) {
      scaled.add(c.mean, c.covariance, c.amplitude >= 0 ? v : -v);
    }
    s.terrain = scaled;
  } else {
    throw std::invalid_argument(fmt::format("unknown scenario override '{}'", key));
  }
}

}  // namespace

Eigen::Matrix3d UnicycleParams::terminal_weight() const {
  return Eigen::Vector3d(q, q, 0.0).asDiagonal();
}

void UnicycleParams::validate() const {
  if (!(v > 0) || !(dt > 0) || K < 1) throw std::invalid_argument("unicycle needs v > 0, dt > 0, K >= 1");
  if (!(q >= 0)) throw std::invalid_argument("terminal weight q must be nonnegative");
  if (!(u_max > 0)) throw std::invalid_argument("u_max must be positive");
  if (!start.allFinite() || !goal.allFinite()) throw std::invalid_argument("start and goal must be finite");
}

void TerrainField::add(const Eigen::Vector2d& mean, const Eigen::Matrix2d& covariance, double amplitude) {
  if (!mean.allFinite() || !covariance.allFinite() || !std::isfinite(amplitude)) {
    throw std::invalid_argument("terrain component must be finite");
  }
  if (std::abs(covariance(0, 1) - covariance(1, 0)) > 1e-12 * (1.0 + covariance.norm())) {
    throw std::invalid_argument("terrain covariance must be symmetric");
  }
  Eigen::LLT<Eigen::Matrix2d> llt(covariance);
  if (llt.info() != Eigen::Success || covariance.determinant() <= 1e-14 * covariance.squaredNorm()) {
    throw std::invalid_argument("terrain covariance must be positive definite");
  }
  components_.push_back(Component{mean, covariance, amplitude, covariance.inverse()});
}

double TerrainField::value(const Eigen::Vector2d& p, Eigen::Vector2d* gradient) const {
  double total = 0.0;
  if (gradient) gradient->setZero();
  for (const auto& c : components_) {
    const Eigen::Vector2d d = p - c.mean;
    const Eigen::Vector2d Sd = c.precision * d;
    const double e = c.amplitude * std::exp(-0.5 * d.dot(Sd));
    total += e;
    if (gradient) *gradient -= e * Sd;
  }
  return total;
}

VectorModel unicycle_dynamics(const UnicycleParams& params, const Eigen::VectorXd& zk) {
  if (zk.size() != kUnicycleNx + kUnicycleNu) throw DimensionError("unicycle point must have 4 entries");
  const double th = zk[2];
  const double c = std::cos(th), s = std::sin(th);
  VectorModel m;
  m.value = Eigen::Vector3d(zk[0] + params.v * c * params.dt, zk[1] + params.v * s * params.dt,
                            zk[2] + zk[3] * params.dt);
  m.jacobian = Eigen::MatrixXd::Zero(3, 4);
  m.jacobian(0, 0) = 1.0;
  m.jacobian(0, 2) = -params.v * s * params.dt;
  m.jacobian(1, 1) = 1.0;
  m.jacobian(1, 2) = params.v * c * params.dt;
  m.jacobian(2, 2) = 1.0;
  m.jacobian(2, 3) = params.dt;
  return m;
}

ScalarModel obstacle_constraint(const Obstacle& obs, const Eigen::VectorXd& zk) {
  const Eigen::Vector2d d = zk.head<2>() - obs.center;
  const double n = d.norm();
  ScalarModel m;
  m.value = obs.radius - n;
  m.gradient = Eigen::VectorXd::Zero(zk.size());
  if (n < kCenterEps) {
    m.gradient[0] = -1.0;
  } else {
    m.gradient.head<2>() = -d / n;
  }
  return m;
}

ScalarModel terrain_cost(const TerrainField& field, const Eigen::VectorXd& zk) {
  Eigen::Vector2d g;
  ScalarModel m;
  m.value = field.value(zk.head<2>(), &g);
  m.gradient = Eigen::VectorXd::Zero(zk.size());
  m.gradient.head<2>() = g;
  return m;
}

GuessKind guess_kind_from_string(const std::string& s) {
  if (s == "over") return GuessKind::over;
  if (s == "straight") return GuessKind::straight;
  if (s == "under") return GuessKind::under;
  if (s == "lower-corridor") return GuessKind::lower_corridor;
  if (s == "waypoints") return GuessKind::waypoints;
  throw std::invalid_argument(fmt::format("unknown guess kind '{}'", s));
}

std::string to_string(GuessKind kind) {
  switch (kind) {
    case GuessKind::over: return "over";
    case GuessKind::straight: return "straight";
    case GuessKind::under: return "under";
    case GuessKind::lower_corridor: return "lower-corridor";
    case GuessKind::waypoints: return "waypoints";
  }
  return "unknown";
}

Trajectory make_guess(const GuessSpec& spec, const UnicycleParams& params) {
  params.validate();
  const Frame frame(params);
  const int K = params.K;
  const double L = frame.length;

  if (L <= 0.0 && spec.kind != GuessKind::waypoints) {
    Eigen::MatrixXd pts = Eigen::MatrixXd::Zero(4, K + 1);
    for (int k = 0; k <= K; ++k) pts.block<3, 1>(0, k) = params.start;
    return Trajectory(kUnicycleNx, kUnicycleNu, pts);
  }

  Eigen::MatrixXd local(2, K + 1);
  switch (spec.kind) {
    case GuessKind::straight:
      for (int k = 0; k <= K; ++k) local.col(k) = Eigen::Vector2d(L * k / K, 0.0);
      break;
    case GuessKind::over:
    case GuessKind::under: {
      const double h = spec.kind == GuessKind::over ? std::abs(spec.offset) : -std::abs(spec.offset);
      if (h == 0.0) {
        for (int k = 0; k <= K; ++k) local.col(k) = Eigen::Vector2d(L * k / K, 0.0);
      } else {
        local = arc_points(L, h, K);
      }
      break;
    }
    case GuessKind::lower_corridor: {
      const int n = 50 * K + 1;
      Eigen::MatrixXd dense(2, n);
      for (int i = 0; i < n; ++i) {
        const double s = static_cast<double>(i) / (n - 1);
        dense.col(i) = Eigen::Vector2d(s * L, spec.offset * std::sin(std::numbers::pi * s));
      }
      local = resample(dense, K);
      break;
    }
    case GuessKind::waypoints: {
      Eigen::MatrixXd poly(2, static_cast<Eigen::Index>(spec.waypoints.size()) + 2);
      poly.col(0) = Eigen::Vector2d::Zero();
      for (std::size_t i = 0; i < spec.waypoints.size(); ++i) {
        if (!spec.waypoints[i].allFinite()) throw std::invalid_argument("waypoints must be finite");
        poly.col(static_cast<Eigen::Index>(i) + 1) = frame.to_local(spec.waypoints[i]);
      }
      poly.col(poly.cols() - 1) = frame.to_local(params.goal);
      local = resample(poly, K);
      break;
    }
  }
  return from_local_path(local, frame, params);
}

ProblemDefinition make_unicycle_problem(const UnicycleParams& params, const std::vector<Obstacle>& obstacles,
                                        const TerrainField& terrain) {
  params.validate();
  for (const auto& o : obstacles) {
    if (!(o.radius > 0) || !o.center.allFinite()) throw std::invalid_argument("obstacle radius must be positive");
  }
  ProblemDefinition pd;
  pd.dims = Dims{kUnicycleNx, kUnicycleNu, params.K, static_cast<int>(obstacles.size()), 0};
  pd.dynamics = [params](int, const Eigen::VectorXd& zk) { return unicycle_dynamics(params, zk); };
  if (!obstacles.empty()) {
    pd.inequality = [obstacles](int, const Eigen::VectorXd& zk) {
      VectorModel m;
      m.value.resize(static_cast<Eigen::Index>(obstacles.size()));
      m.jacobian.resize(static_cast<Eigen::Index>(obstacles.size()), zk.size());
      for (std::size_t i = 0; i < obstacles.size(); ++i) {
        const ScalarModel s = obstacle_constraint(obstacles[i], zk);
        m.value[static_cast<Eigen::Index>(i)] = s.value;
        m.jacobian.row(static_cast<Eigen::Index>(i)) = s.gradient.transpose();
      }
      return m;
    };
  }

  CostTerm control{"control", CostTerm::Stage::running, true,
                   [](int, const Eigen::VectorXd& zk) {
                     ScalarModel s;
                     s.value = zk[3] * zk[3];
                     s.gradient = Eigen::Vector4d(0, 0, 0, 2.0 * zk[3]);
                     return s;
                   },
                   [](int) {
                     Eigen::MatrixXd H = Eigen::MatrixXd::Zero(4, 4);
                     H(3, 3) = 2.0;
                     return H;
                   }};
  const Eigen::Matrix3d Q = params.terminal_weight();
  const Eigen::Vector3d target(params.goal.x(), params.goal.y(), 0.0);
  CostTerm terminal{"terminal", CostTerm::Stage::terminal, true,
                    [Q, target](int, const Eigen::VectorXd& zk) {
                      const Eigen::Vector3d e = zk.head<3>() - target;
                      ScalarModel s;
                      s.value = e.dot(Q * e);
                      s.gradient = Eigen::VectorXd::Zero(4);
                      s.gradient.head<3>() = 2.0 * Q * e;
                      return s;
                    },
                    [Q](int) {
                      Eigen::MatrixXd H = Eigen::MatrixXd::Zero(4, 4);
                      H.topLeftCorner<3, 3>() = 2.0 * Q;
                      return H;
                    }};
  pd.costs = {control, terminal};
  if (!terrain.empty()) {
    pd.costs.push_back(CostTerm{"terrain", CostTerm::Stage::running, false,
                                [terrain](int, const Eigen::VectorXd& zk) { return terrain_cost(terrain, zk); },
                                {}});
  }

  pd.convex_sets.assign(params.K + 1, ConvexSet::unbounded(4));
  for (int k = 0; k < params.K; ++k) {
    pd.convex_sets[k].lower[3] = -params.u_max;
    pd.convex_sets[k].upper[3] = params.u_max;
  }
  ConvexSet& first = pd.convex_sets[0];
  first.eq_matrix = Eigen::MatrixXd::Zero(3, 4);
  first.eq_matrix.leftCols<3>().setIdentity();
  first.eq_rhs = params.start;
  pd.validate();
  return pd;
}

std::vector<std::string> scenario_names() { return {"unicycle-basic", "unicycle-terrain"}; }

std::vector<std::string> scenario_override_keys() {
  return {"K",       "dt",          "goal_x",       "goal_y",      "lower_offset",
          "over_offset", "q",       "start_theta",  "start_x",     "start_y",
          "terrain_amplitude", "u_max", "under_offset", "v"};
}

Scenario build_scenario(const std::string& name, const ScenarioOverrides& overrides) {
  Scenario s;
  s.name = name;
  s.obstacles = default_obstacles();
  s.guesses = {GuessSpec{"over", GuessKind::over, 4.5, {}}, GuessSpec{"straight", GuessKind::straight, 0.0, {}},
               GuessSpec{"under", GuessKind::under, 4.5, {}}};
  s.lower_corridor_guess = GuessSpec{"lower-corridor", GuessKind::lower_corridor, kLowerCorridor, {}};
  s.scp.weights = PenaltyWeights{100.0, 100.0, 100.0, 3.0, InequalityPenalty::positive_part};
  s.scp.eps_c = 1e-4;
  s.scp.max_iters = 100;
  s.osscp.weights = s.scp.weights;
  s.osscp.rho = 3.0;
  s.osscp.eps_r = 1e-3;
  s.osscp.eps_s = 1e-3;
  s.osscp.eps_c = 1e-4;
  s.osscp.max_iters = 200;

  if (name == "unicycle-basic") {
    // defaults above
  } else if (name == "unicycle-terrain") {
    const Eigen::Matrix2d cov = Eigen::Vector2d(1.5 * 1.5, 0.8 * 0.8).asDiagonal();
    s.terrain.add({5.0, kUpperCorridor}, cov, 2.0);
    s.terrain.add({5.0, kLowerCorridor}, cov, -2.0);
    s.guesses[2].offset = 6.5;
    s.osscp.rho = 20.0;
  } else {
    throw std::invalid_argument(fmt::format("unknown scenario '{}'", name));
  }

  for (const auto& [key, value] : overrides) apply_override(s, key, value);
  s.problem = make_unicycle_problem(s.params, s.obstacles, s.terrain);
  return s;
}

double lateral_offset(const UnicycleParams& params, const Eigen::Vector2d& p) {
  return Frame(params).to_local(p).y();
}

int homotopy_class(const Trajectory& z, const std::vector<Obstacle>& obstacles) {
  if (obstacles.empty()) return 0;
  double cx = 0.0;
  for (const auto& o : obstacles) cx += o.center.x();
  cx /= static_cast<double>(obstacles.size());
  for (int k = 0; k < z.K(); ++k) {
    const double x0 = z.points()(0, k) - cx;
    const double x1 = z.points()(0, k + 1) - cx;
    if (x0 == 0.0 || (x0 < 0.0) != (x1 < 0.0)) {
      const double t = x0 == 0.0 ? 0.0 : x0 / (x0 - x1);
      const double y = z.points()(1, k) + t * (z.points()(1, k + 1) - z.points()(1, k));
      int below = 0;
      for (const auto& o : obstacles) below += o.center.y() < y ? 1 : 0;
      return below;
    }
  }
  return -1;
}

}  // namespace osscp
