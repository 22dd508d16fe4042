#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace osscp {

/// Thrown when array shapes disagree with the declared problem dimensions.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a callback or input produces NaN/Inf.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * Discrete trajectory z_{0:K}.
 *
 * Column k of `points()` holds the stacked point z_k = [x_k; u_k]. The
 * control at the final knot carries no meaning and is held at zero, so every
 * constructor zeroes it and every mutation path keeps it zero.
 */
class Trajectory {
 public:
  Trajectory() = default;

  /// All-zero trajectory with K intervals.
  Trajectory(int nx, int nu, int K);

  /// Wraps an (nx+nu) x (K+1) matrix. Rejects non-finite entries; the final
  /// control column is forced to zero.
  Trajectory(int nx, int nu, const Eigen::MatrixXd& points);

  static Trajectory from_stacked(int nx, int nu, int K,
                                 const Eigen::Ref<const Eigen::VectorXd>& v);

  int nx() const { return nx_; }
  int nu() const { return nu_; }
  int nz() const { return nx_ + nu_; }
  int K() const { return K_; }
  /// Number of stacked entries, nz * (K + 1).
  int size() const { return nz() * (K_ + 1); }

  const Eigen::MatrixXd& points() const { return points_; }

  Eigen::VectorXd z(int k) const { return points_.col(k); }
  Eigen::VectorXd x(int k) const { return points_.col(k).head(nx_); }
  Eigen::VectorXd u(int k) const { return points_.col(k).tail(nu_); }

  /// Overwrites z_k. Writing a nonzero control at k = K is an error.
  void set_z(int k, const Eigen::Ref<const Eigen::VectorXd>& zk);

  /// Column-major stacking [z_0; z_1; ...; z_K].
  Eigen::VectorXd stacked() const;

  /// Euclidean norm over all stacked entries.
  double norm() const { return points_.norm(); }

  bool same_shape(const Trajectory& other) const {
    return nx_ == other.nx_ && nu_ == other.nu_ && K_ == other.K_;
  }

  Trajectory& operator+=(const Trajectory& rhs);
  Trajectory& operator-=(const Trajectory& rhs);
  Trajectory& operator*=(double s);

  friend Trajectory operator+(Trajectory lhs, const Trajectory& rhs) { return lhs += rhs; }
  friend Trajectory operator-(Trajectory lhs, const Trajectory& rhs) { return lhs -= rhs; }
  friend Trajectory operator*(Trajectory lhs, double s) { return lhs *= s; }
  friend Trajectory operator*(double s, Trajectory rhs) { return rhs *= s; }

  friend bool operator==(const Trajectory& a, const Trajectory& b) {
    return a.same_shape(b) && a.points_ == b.points_;
  }

 private:
  void require_same_shape(const Trajectory& other, const char* what) const;

  int nx_ = 0;
  int nu_ = 0;
  int K_ = 0;
  Eigen::MatrixXd points_;
};

/// Largest absolute entry difference; shapes must match.
double max_abs_diff(const Trajectory& a, const Trajectory& b);

}  // namespace osscp
