#include "osscp/trajectory.hpp"

#include <fmt/format.h>

namespace osscp {

Trajectory::Trajectory(int nx, int nu, int K) : nx_(nx), nu_(nu), K_(K) {
  if (nx < 1 || nu < 0 || K < 1) {
    throw DimensionError(fmt::format("invalid trajectory dims nx={} nu={} K={}", nx, nu, K));
  }
  points_ = Eigen::MatrixXd::Zero(nx + nu, K + 1);
}

Trajectory::Trajectory(int nx, int nu, const Eigen::MatrixXd& points)
    : Trajectory(nx, nu, static_cast<int>(points.cols()) - 1) {
  if (points.rows() != nz()) {
    throw DimensionError(
        fmt::format("trajectory has {} rows, expected nx + nu = {}", points.rows(), nz()));
  }
  if (!points.allFinite()) throw NonFiniteError("trajectory contains non-finite entries");
  points_ = points;
  points_.col(K_).tail(nu_).setZero();
}

Trajectory Trajectory::from_stacked(int nx, int nu, int K,
                                    const Eigen::Ref<const Eigen::VectorXd>& v) {
  const int nz = nx + nu;
  if (v.size() != nz * (K + 1)) {
    throw DimensionError(
        fmt::format("stacked vector has {} entries, expected {}", v.size(), nz * (K + 1)));
  }
  Eigen::MatrixXd m = Eigen::Map<const Eigen::MatrixXd>(v.data(), nz, K + 1);
  return Trajectory(nx, nu, m);
}

void Trajectory::set_z(int k, const Eigen::Ref<const Eigen::VectorXd>& zk) {
  if (k < 0 || k > K_) throw std::out_of_range(fmt::format("knot {} outside [0, {}]", k, K_));
  if (zk.size() != nz()) {
    throw DimensionError(fmt::format("z_k has {} entries, expected {}", zk.size(), nz()));
  }
  if (!zk.allFinite()) throw NonFiniteError("z_k contains non-finite entries");
  if (k == K_ && nu_ > 0 && !zk.tail(nu_).isZero(0.0)) {
    throw std::invalid_argument("the final control u_K must be zero");
  }
  points_.col(k) = zk;
}

Eigen::VectorXd Trajectory::stacked() const {
  return Eigen::Map<const Eigen::VectorXd>(points_.data(), points_.size());
}

void Trajectory::require_same_shape(const Trajectory& other, const char* what) const {
  if (!same_shape(other)) {
    throw DimensionError(fmt::format("{}: shape ({}, {}, {}) vs ({}, {}, {})", what, nx_, nu_, K_,
                                     other.nx_, other.nu_, other.K_));
  }
}

Trajectory& Trajectory::operator+=(const Trajectory& rhs) {
  require_same_shape(rhs, "trajectory +=");
  points_ += rhs.points_;
  return *this;
}

Trajectory& Trajectory::operator-=(const Trajectory& rhs) {
  require_same_shape(rhs, "trajectory -=");
  points_ -= rhs.points_;
  return *this;
}

Trajectory& Trajectory::operator*=(double s) {
  points_ *= s;
  return *this;
}

double max_abs_diff(const Trajectory& a, const Trajectory& b) {
  if (!a.same_shape(b)) throw DimensionError("max_abs_diff: shape mismatch");
  return (a.points() - b.points()).cwiseAbs().maxCoeff();
}

}  // namespace osscp
