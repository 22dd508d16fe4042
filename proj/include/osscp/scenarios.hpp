#pragma once

#include "osscp/osscp.hpp"
#include "osscp/problem.hpp"
#include "osscp/scp.hpp"

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

namespace osscp {

/// Unicycle with state (x, y, theta), yaw-rate control and constant speed.
struct UnicycleParams {
  double v = 1.0;
  double dt = 0.25;
  int K = 40;
  Eigen::Vector3d start{0.0, 0.0, 0.0};
  Eigen::Vector2d goal{10.0, 0.0};
  double q = 10.0;       ///< terminal weight on position, heading unweighted
  double u_max = 3.0;    ///< |u| bound, infinite for none

  Eigen::Matrix3d terminal_weight() const;
  void validate() const;
};

struct Obstacle {
  Eigen::Vector2d center;
  double radius = 1.0;
};

/// Sum of signed Gaussian bumps a * exp(-1/2 d' S^-1 d) over the plane.
class TerrainField {
 public:
  struct Component {
    Eigen::Vector2d mean;
    Eigen::Matrix2d covariance;
    double amplitude = 1.0;
    Eigen::Matrix2d precision;  ///< inverse of `covariance`
  };

  /// Throws std::invalid_argument unless `covariance` is symmetric positive
  /// definite.
  void add(const Eigen::Vector2d& mean, const Eigen::Matrix2d& covariance, double amplitude);

  /// Value and gradient with respect to the position p.
  double value(const Eigen::Vector2d& p, Eigen::Vector2d* gradient = nullptr) const;

  const std::vector<Component>& components() const { return components_; }
  bool empty() const { return components_.empty(); }

 private:
  std::vector<Component> components_;
};

inline constexpr int kUnicycleNx = 3;
inline constexpr int kUnicycleNu = 1;

/// x_{k+1} of the unicycle and its Jacobian with respect to z_k.
VectorModel unicycle_dynamics(const UnicycleParams& params, const Eigen::VectorXd& zk);

/// g = R - ||p - c|| with its gradient in z_k.
ScalarModel obstacle_constraint(const Obstacle& obs, const Eigen::VectorXd& zk);

/// Terrain value at the position of z_k with its gradient in z_k.
ScalarModel terrain_cost(const TerrainField& field, const Eigen::VectorXd& zk);

enum class GuessKind { over, straight, under, lower_corridor, waypoints };

GuessKind guess_kind_from_string(const std::string& s);
std::string to_string(GuessKind kind);

/// An initial guess request. `offset` is the signed lateral offset of the arc
/// waypoint (over/under) or of the bump (lower-corridor); `waypoints` are
/// intermediate positions for the waypoints kind.
struct GuessSpec {
  std::string name;
  GuessKind kind = GuessKind::straight;
  double offset = 0.0;
  std::vector<Eigen::Vector2d> waypoints;
};

/**
 * Initial guess from start to goal. Positions follow the requested path with
 * uniform spacing along its length, headings point along the path and
 * controls come from heading differences. Arcs are circular and built in the
 * start-goal frame, so arcs with opposite offsets are exact mirror images.
 */
Trajectory make_guess(const GuessSpec& spec, const UnicycleParams& params);

/// A benchmark problem with its default guesses and solver settings.
struct Scenario {
  std::string name;
  UnicycleParams params;
  std::vector<Obstacle> obstacles;
  TerrainField terrain;
  ProblemDefinition problem;
  std::vector<GuessSpec> guesses;   ///< default guesses
  GuessSpec lower_corridor_guess;   ///< extra guess through the lower corridor
  ScpConfig scp;
  OsscpConfig osscp;
};

/// Scalar overrides keyed by name; see scenario_override_keys().
using ScenarioOverrides = std::map<std::string, double>;

std::vector<std::string> scenario_names();
std::vector<std::string> scenario_override_keys();

/// Assembles a named scenario. Unknown names or override keys and invalid
/// values throw std::invalid_argument.
Scenario build_scenario(const std::string& name, const ScenarioOverrides& overrides = {});

/// Problem definition for the given unicycle data.
ProblemDefinition make_unicycle_problem(const UnicycleParams& params, const std::vector<Obstacle>& obstacles,
                                        const TerrainField& terrain);

/// Signed lateral position relative to the start-goal axis (left positive).
double lateral_offset(const UnicycleParams& params, const Eigen::Vector2d& p);

/// Obstacle homotopy class of a trajectory: the number of obstacle centers
/// below the point where it first crosses the vertical line through the mean
/// obstacle x, or -1 when it never crosses that line.
int homotopy_class(const Trajectory& z, const std::vector<Obstacle>& obstacles);

}  // namespace osscp
