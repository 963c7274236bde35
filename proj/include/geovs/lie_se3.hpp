#pragma once

#include <Eigen/Dense>
#include <utility>

#include "geovs/errors.hpp"

namespace geovs {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

/// skew(v) * u = v x u
Eigen::Matrix3d skew(const Eigen::Vector3d& v);

/// Inverse of skew(); averages the off-diagonal pairs.
Eigen::Vector3d unskew(const Eigen::Matrix3d& m);

/// Rigid transform on SE(3), stored as rotation matrix + position.
/// The homogeneous 4x4 form is materialized on demand.
struct Pose {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d p = Eigen::Vector3d::Zero();

  static Pose Identity() { return Pose{}; }
  static Pose Translation(const Eigen::Vector3d& t);

  /// Builds from a homogeneous matrix; throws StructureError if the rotation
  /// block or the bottom row is off by more than tol.
  static Pose from_matrix(const Eigen::Matrix4d& m, double tol = 1e-9);

  Eigen::Matrix4d matrix() const;
  Pose inverse() const;
  Pose operator*(const Pose& o) const;
  Eigen::Vector3d act(const Eigen::Vector3d& x) const { return R * x + p; }

  /// R'R = I and det R = +1 within tol (Frobenius).
  bool satisfies_invariants(double tol = 1e-9) const;
};

/// Body velocity (v, w). Maps to a 6-vector as [v; w].
struct Twist {
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  Eigen::Vector3d w = Eigen::Vector3d::Zero();

  Vector6d vec() const;
  static Twist from_vec(const Vector6d& x);
};

/// Weights of the left-invariant pose metric: sqrt(delta_R + delta_p).
struct MetricWeights {
  Eigen::Matrix3d Gp = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d GR = Eigen::Matrix3d::Identity();

  static MetricWeights Identity() { return MetricWeights{}; }

  /// Symmetric within tol and positive definite.
  bool is_valid(double tol = 1e-12) const;
};

/// [w^ v; 0 0]
Eigen::Matrix4d hat(const Twist& t);

/// Inverse of hat(); throws StructureError unless the upper-left block is
/// skew and the bottom row is zero within tol.
Twist vee(const Eigen::Matrix4d& m, double tol = 1e-9);

/// Closed-form exponential of the twist scaled by q (Rodrigues rotation
/// block plus the screw translation block). w need not be unit norm;
/// ||w|| < 1e-12 selects the pure-translation branch.
Pose exp_twist(const Twist& t, double q);

/// exp_twist(t, 1).
Pose exp_twist(const Twist& t);

/// Inverse of exp_twist: returns a unit-normalized twist and the scalar q
/// with exp_twist(t, q) = g. Throws StructureError on the pi-rotation
/// branch (trace(R) <= -1 + 1e-9).
std::pair<Twist, double> log_pose(const Pose& g);

/// log_pose collapsed to the 6-vector t.vec() * q.
Vector6d log_pose_vec(const Pose& g);

/// Ad_g as a 6x6 matrix acting on [v; w]: hat(Ad_g x) = g hat(x) g^-1.
Matrix6d adjoint(const Pose& g);

/// ad_x as a 6x6 matrix: ad_small(x) y = vee([hat(x), hat(y)]).
Matrix6d ad_small(const Twist& x);

/// Tangent-space velocity g * hat(x).
Eigen::Matrix4d left_translate(const Pose& g, const Twist& x);

/// ||GR||_F * arccos((tr(R0'R1) - 1) / 2), argument clamped to [-1, 1].
double rotation_distance(const Eigen::Matrix3d& R0, const Eigen::Matrix3d& R1,
                         const Eigen::Matrix3d& GR);

/// ||Gp (p0 - p1)||_2
double position_distance(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1,
                         const Eigen::Matrix3d& Gp);

/// sqrt(delta_R + delta_p); zero iff g0 = g1. Validates the weights.
double geodesic_distance(const Pose& g0, const Pose& g1,
                         const MetricWeights& w);

/// Nearest rotation in Frobenius norm (polar projection via SVD).
Eigen::Matrix3d project_to_so3(const Eigen::Matrix3d& m);

}  // namespace geovs
