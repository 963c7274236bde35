#include "geovs/passivity_control.hpp"

namespace geovs {

namespace {

/// Bpinv = (B'B)^-1 B'
Eigen::MatrixXd left_pseudo_inverse(const Eigen::MatrixXd& B) {
  const Eigen::MatrixXd BtB = B.transpose() * B;
  return BtB.ldlt().solve(B.transpose());
}

}  // namespace

bool Gains::is_valid(double tol) const {
  auto spd = [tol](const Eigen::MatrixXd& m) {
    if ((m - m.transpose()).norm() > tol) return false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    return es.eigenvalues().minCoeff() > 0.0;
  };
  return spd(Kp) && spd(KR) && spd(Kd);
}

Vector6d pose_error(const Pose& g, const TargetState& target, const Gains& k) {
  const Eigen::Matrix3d& R = g.R;
  const Eigen::Matrix3d& Rs = target.g_star.R;
  Vector6d e;
  e.head<3>() = R.transpose() * (k.Kp * (g.p - target.g_star.p));
  const Eigen::Matrix3d S =
      k.KR * Rs.transpose() * R - R.transpose() * Rs * k.KR.transpose();
  e.tail<3>() = 0.5 * unskew(S);
  return e;
}

double desired_hamiltonian(const RobotModel& m, const PhaseState& s,
                           const TargetState& target, const Gains& k) {
  const Vector6d pe = s.momentum() - target.p_star;
  const Eigen::Vector3d dp = s.g.p - target.g_star.p;
  const double kinetic = 0.5 * pe.dot(task_inertia_inverse(m, s.q) * pe);
  const double position = 0.5 * dp.dot(k.Kp * dp);
  const double rotation =
      0.5 * (k.KR * (Eigen::Matrix3d::Identity() -
                     target.g_star.R.transpose() * s.g.R))
                .trace();
  return kinetic + position + rotation;
}

Vector18d desired_hamiltonian_gradient(const RobotModel& m,
                                       const PhaseState& s,
                                       const TargetState& target,
                                       const Gains& k) {
  Vector18d grad;
  grad.segment<3>(0) = k.Kp * (s.g.p - target.g_star.p);
  // d/dR [tr(KR (I - R*'R)) / 2] = -(R* KR)/2, taken row by row.
  const Eigen::Matrix3d dR = -0.5 * target.g_star.R * k.KR;
  for (int i = 0; i < 3; ++i) {
    grad.segment<3>(3 + 3 * i) = dR.row(i).transpose();
  }
  grad.segment<6>(12) =
      task_inertia_inverse(m, s.q) * (s.momentum() - target.p_star);
  return grad;
}

Eigen::VectorXd u_energy_shaping(const RobotModel& m, const PhaseState& s,
                                 const TargetState& target, const Gains& k,
                                 double damping) {
  const TaskDynamics td = eval_task_dynamics(m, s.q, damping);
  const Vector6d xi = td.lambda_inv * s.momentum();
  const Vector6d eta = td.B * gravity_gradient_joint(m, s.q);
  const Interconnection ic = interconnection(s);
  const Vector6d bracket = eta - ic.px * xi - pose_error(s.g, target, k);
  return left_pseudo_inverse(td.B) * bracket;
}

Eigen::VectorXd u_damping(const RobotModel& m, const PhaseState& s,
                          const Gains& k, double damping) {
  const TaskDynamics td = eval_task_dynamics(m, s.q, damping);
  const Vector6d xi = td.lambda_inv * s.momentum();
  return left_pseudo_inverse(td.B) * (-(k.Kd * xi));
}

Eigen::VectorXd u_damping_joint(const RobotModel& m, const PhaseState& s,
                                const Gains& k, double damping) {
  const TaskDynamics td = eval_task_dynamics(m, s.q, damping);
  const Vector6d xi = td.lambda_inv * s.momentum();
  return -(k.Kd * (td.B.transpose() * xi));
}

double check_matching(const RobotModel& m, const PhaseState& s,
                      const TargetState& target, const Gains& k,
                      double damping) {
  const TaskDynamics td = eval_task_dynamics(m, s.q, damping);
  const int n = m.dof();

  Eigen::MatrixXd B_full = Eigen::MatrixXd::Zero(18, n);
  B_full.block(12, 0, 6, n) = td.B;

  // Orthonormal left annihilator: left singular vectors of the zero
  // singular values. Full-rank square input matrix -> empty annihilator.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(B_full, Eigen::ComputeFullU);
  const Eigen::VectorXd sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv[i] > 1e-12 * sv.maxCoeff()) ++rank;
  }
  if (rank >= 18) return 0.0;
  const Eigen::MatrixXd B_perp =
      svd.matrixU().rightCols(18 - rank).transpose();

  const Vector18d plant_flow =
      interconnection(s).assembled() * hamiltonian_gradient(m, s, damping);

  // Jd per the desired interconnection: gx structure with target rotation rows.
  Eigen::Matrix<double, 12, 6> J1 = Eigen::Matrix<double, 12, 6>::Zero();
  J1.block<3, 3>(0, 0) = s.g.R;
  for (int i = 0; i < 3; ++i) {
    J1.block<3, 3>(3 + 3 * i, 3) = skew(target.g_star.R.row(i).transpose());
  }
  Matrix18d Jd = Matrix18d::Zero();
  Jd.block<12, 6>(0, 12) = J1;
  Jd.block<6, 12>(12, 0) = -J1.transpose();
  Matrix18d Rd = Matrix18d::Zero();
  Rd.block<6, 6>(12, 12) = k.Kd;

  const Vector18d desired_flow =
      (Jd - Rd) * desired_hamiltonian_gradient(m, s, target, k);
  return (B_perp * (plant_flow - desired_flow)).norm();
}

double lyapunov_rate(const RobotModel& m, const PhaseState& s,
                     const TargetState& target, const Gains& k) {
  const Vector6d xi_e =
      task_inertia_inverse(m, s.q) * (s.momentum() - target.p_star);
  return -xi_e.dot(k.Kd * xi_e);
}

}  // namespace geovs
