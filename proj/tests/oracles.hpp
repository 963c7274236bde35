#pragma once

// Independent reference computations used as test oracles. Everything here
// deliberately avoids the library code paths it is meant to check.

#include <Eigen/Dense>
#include <random>

#include "geovs/lie_se3.hpp"

namespace oracles {

/// Truncated matrix-exponential series, 20 terms by default.
inline Eigen::MatrixXd expm_series(const Eigen::MatrixXd& A, int terms = 20) {
  Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(A.rows(), A.cols());
  Eigen::MatrixXd term = sum;
  for (int k = 1; k <= terms; ++k) {
    term = term * A / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

inline Eigen::Matrix3d skew3(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return s;
}

inline Eigen::Vector3d unskew3(const Eigen::Matrix3d& m) {
  return {m(2, 1), m(0, 2), m(1, 0)};
}

inline geovs::Twist random_twist(std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> d(-scale, scale);
  geovs::Twist t;
  t.v = Eigen::Vector3d(d(rng), d(rng), d(rng));
  t.w = Eigen::Vector3d(d(rng), d(rng), d(rng));
  return t;
}

inline geovs::Pose random_pose(std::mt19937_64& rng, double angle_scale = 1.0,
                               double trans_scale = 1.0) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Eigen::Vector3d axis(d(rng), d(rng), d(rng));
  if (axis.norm() < 1e-6) axis = Eigen::Vector3d::UnitX();
  axis.normalize();
  const double angle = angle_scale * d(rng);
  geovs::Pose g;
  g.R = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
  g.p = trans_scale * Eigen::Vector3d(d(rng), d(rng), d(rng));
  return g;
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, int n,
                                     double scale = 1.0) {
  std::uniform_real_distribution<double> d(-scale, scale);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

}  // namespace oracles
