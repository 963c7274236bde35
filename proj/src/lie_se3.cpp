#include "geovs/lie_se3.hpp"

#include <cmath>

namespace geovs {

namespace {
constexpr double kZeroAngle = 1e-12;
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  // clang-format off
  s <<     0, -v.z(),  v.y(),
       v.z(),      0, -v.x(),
      -v.y(),  v.x(),      0;
  // clang-format on
  return s;
}

Eigen::Vector3d unskew(const Eigen::Matrix3d& m) {
  return {(m(2, 1) - m(1, 2)) / 2.0, (m(0, 2) - m(2, 0)) / 2.0,
          (m(1, 0) - m(0, 1)) / 2.0};
}

Pose Pose::Translation(const Eigen::Vector3d& t) {
  Pose g;
  g.p = t;
  return g;
}

Pose Pose::from_matrix(const Eigen::Matrix4d& m, double tol) {
  Pose g;
  g.R = m.block<3, 3>(0, 0);
  g.p = m.block<3, 1>(0, 3);
  const Eigen::RowVector4d bottom = m.row(3);
  if ((bottom - Eigen::RowVector4d(0, 0, 0, 1)).norm() > tol) {
    throw StructureError("Pose::from_matrix: bottom row is not [0 0 0 1]");
  }
  if (!g.satisfies_invariants(tol)) {
    throw StructureError("Pose::from_matrix: rotation block is not in SO(3)");
  }
  return g;
}

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.block<3, 3>(0, 0) = R;
  m.block<3, 1>(0, 3) = p;
  return m;
}

Pose Pose::inverse() const { return Pose{R.transpose(), -(R.transpose() * p)}; }

Pose Pose::operator*(const Pose& o) const { return Pose{R * o.R, R * o.p + p}; }

bool Pose::satisfies_invariants(double tol) const {
  const double ortho = (R.transpose() * R - Eigen::Matrix3d::Identity()).norm();
  return ortho <= tol && std::abs(R.determinant() - 1.0) <= tol;
}

Vector6d Twist::vec() const {
  Vector6d x;
  x << v, w;
  return x;
}

Twist Twist::from_vec(const Vector6d& x) { return Twist{x.head<3>(), x.tail<3>()}; }

bool MetricWeights::is_valid(double tol) const {
  for (const Eigen::Matrix3d* m : {&Gp, &GR}) {
    if ((*m - m->transpose()).norm() > tol) return false;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(*m);
    if (es.eigenvalues().minCoeff() <= 0.0) return false;
  }
  return true;
}

Eigen::Matrix4d hat(const Twist& t) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m.block<3, 3>(0, 0) = skew(t.w);
  m.block<3, 1>(0, 3) = t.v;
  return m;
}

Twist vee(const Eigen::Matrix4d& m, double tol) {
  const Eigen::Matrix3d ul = m.block<3, 3>(0, 0);
  if ((ul + ul.transpose()).lpNorm<Eigen::Infinity>() > tol) {
    throw StructureError("vee: upper-left block is not skew-symmetric");
  }
  if (m.row(3).lpNorm<Eigen::Infinity>() > tol) {
    throw StructureError("vee: bottom row is not zero");
  }
  return Twist{m.block<3, 1>(0, 3), unskew(ul)};
}

Pose exp_twist(const Twist& t, double q) {
  const double a = t.w.norm();
  if (a < kZeroAngle) {
    return Pose{Eigen::Matrix3d::Identity(), t.v * q};
  }
  const Eigen::Vector3d n = t.w / a;
  const Eigen::Vector3d vn = t.v / a;
  const double theta = a * q;
  const Eigen::Matrix3d K = skew(n);
  const Eigen::Matrix3d R = Eigen::Matrix3d::Identity() +
                            std::sin(theta) * K +
                            (1.0 - std::cos(theta)) * K * K;
  // p = (I - R)(n x v/a) + n n' (v/a) theta
  const Eigen::Vector3d p =
      (Eigen::Matrix3d::Identity() - R) * n.cross(vn) + n * n.dot(vn) * theta;
  return Pose{R, p};
}

Pose exp_twist(const Twist& t) { return exp_twist(t, 1.0); }

std::pair<Twist, double> log_pose(const Pose& g) {
  const double tr = g.R.trace();
  if (tr <= -1.0 + 1e-9) {
    throw StructureError("log_pose: rotation angle at the pi branch");
  }
  // unskew(R) = sin(theta) n; atan2 keeps full precision near identity,
  // where acos of the trace loses half the significand.
  const Eigen::Vector3d sin_axis = unskew(g.R);
  const double s = sin_axis.norm();
  const double c = (tr - 1.0) / 2.0;
  const double theta = std::atan2(s, c);

  if (theta < 1e-7) {
    // w ~ theta n to O(theta^3); V^-1 to second order.
    const Eigen::Vector3d w_vec = sin_axis;
    const Eigen::Matrix3d W = skew(w_vec);
    const Eigen::Vector3d v_vec =
        (Eigen::Matrix3d::Identity() - 0.5 * W + (1.0 / 12.0) * W * W) * g.p;
    const double a = w_vec.norm();
    if (a < kZeroAngle) {
      const double pn = v_vec.norm();
      if (pn < kZeroAngle) return {Twist{}, 0.0};
      return {Twist{v_vec / pn, Eigen::Vector3d::Zero()}, pn};
    }
    return {Twist{v_vec / a, w_vec / a}, a};
  }

  const Eigen::Vector3d n = sin_axis / s;
  // p = A v with A = (I - R) n^ + n n' theta  (unit-twist screw translation)
  const Eigen::Matrix3d A =
      (Eigen::Matrix3d::Identity() - g.R) * skew(n) + n * n.transpose() * theta;
  const Eigen::Vector3d v = A.partialPivLu().solve(g.p);
  return {Twist{v, n}, theta};
}

Vector6d log_pose_vec(const Pose& g) {
  const auto [t, q] = log_pose(g);
  return t.vec() * q;
}

Matrix6d adjoint(const Pose& g) {
  Matrix6d ad = Matrix6d::Zero();
  ad.block<3, 3>(0, 0) = g.R;
  ad.block<3, 3>(0, 3) = skew(g.p) * g.R;
  ad.block<3, 3>(3, 3) = g.R;
  return ad;
}

Matrix6d ad_small(const Twist& x) {
  Matrix6d ad = Matrix6d::Zero();
  ad.block<3, 3>(0, 0) = skew(x.w);
  ad.block<3, 3>(0, 3) = skew(x.v);
  ad.block<3, 3>(3, 3) = skew(x.w);
  return ad;
}

Eigen::Matrix4d left_translate(const Pose& g, const Twist& x) {
  return g.matrix() * hat(x);
}

double rotation_distance(const Eigen::Matrix3d& R0, const Eigen::Matrix3d& R1,
                         const Eigen::Matrix3d& GR) {
  const double c = ((R0.transpose() * R1).trace() - 1.0) / 2.0;
  const double clamped = std::min(1.0, std::max(-1.0, c));
  return GR.norm() * std::acos(clamped);
}

double position_distance(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1,
                         const Eigen::Matrix3d& Gp) {
  return (Gp * (p0 - p1)).norm();
}

double geodesic_distance(const Pose& g0, const Pose& g1,
                         const MetricWeights& w) {
  if (!w.is_valid()) {
    throw StructureError("geodesic_distance: metric weights must be symmetric positive definite");
  }
  const double dR = rotation_distance(g0.R, g1.R, w.GR);
  const double dp = position_distance(g0.p, g1.p, w.Gp);
  return std::sqrt(dR + dp);
}

Eigen::Matrix3d project_to_so3(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d R = svd.matrixU() * svd.matrixV().transpose();
  if (R.determinant() < 0.0) {
    Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
    flip(2, 2) = -1.0;
    R = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return R;
}

}  // namespace geovs
