#include "geovs/port_hamiltonian.hpp"

namespace geovs {

namespace {

void check_input_dim(const RobotModel& m, const Eigen::VectorXd& u) {
  if (u.size() != m.dof()) {
    throw DimensionError("state_derivative: input dimension mismatch");
  }
}

/// dH/dq at fixed momentum: dG/dq + p' dLambda/dq p / 2, central differences.
Eigen::VectorXd hamiltonian_joint_gradient(const RobotModel& m,
                                           const Eigen::VectorXd& q,
                                           const Vector6d& p) {
  const double h = 1e-6;
  Eigen::VectorXd grad(m.dof());
  Eigen::VectorXd qq = q;
  for (int i = 0; i < m.dof(); ++i) {
    qq[i] = q[i] + h;
    const double plus =
        0.5 * p.dot(task_inertia_inverse(m, qq) * p) + gravity_potential(m, qq);
    qq[i] = q[i] - h;
    const double minus =
        0.5 * p.dot(task_inertia_inverse(m, qq) * p) + gravity_potential(m, qq);
    qq[i] = q[i];
    grad[i] = (plus - minus) / (2.0 * h);
  }
  return grad;
}

}  // namespace

Vector12d flatten_pose(const Pose& g) {
  Vector12d x;
  x << g.p, g.R.row(0).transpose(), g.R.row(1).transpose(),
      g.R.row(2).transpose();
  return x;
}

Vector18d flatten_state(const PhaseState& s) {
  Vector18d x;
  x << flatten_pose(s.g), s.pv, s.pw;
  return x;
}

Matrix18d Interconnection::assembled() const {
  Matrix18d J = Matrix18d::Zero();
  J.block<12, 6>(0, 12) = gx;
  J.block<6, 12>(12, 0) = -gx.transpose();
  J.block<6, 6>(12, 12) = px;
  return J;
}

Interconnection interconnection(const PhaseState& s) {
  Interconnection ic;
  ic.gx.setZero();
  ic.gx.block<3, 3>(0, 0) = s.g.R;
  for (int i = 0; i < 3; ++i) {
    ic.gx.block<3, 3>(3 + 3 * i, 3) = skew(s.g.R.row(i).transpose());
  }
  ic.px.setZero();
  ic.px.block<3, 3>(0, 3) = skew(s.pv);
  ic.px.block<3, 3>(3, 0) = skew(s.pv);
  ic.px.block<3, 3>(3, 3) = skew(s.pw);
  return ic;
}

TaskDynamics eval_task_dynamics(const RobotModel& m, const Eigen::VectorXd& q,
                                double damping) {
  TaskDynamics td;
  td.J = body_jacobian(m, q);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(td.J);
  td.sigma_min = svd.singularValues().minCoeff();
  if (td.J.rows() > td.J.cols() || td.sigma_min < kSingularTol) {
    throw SingularityError("eval_task_dynamics: rank-deficient body Jacobian",
                           td.sigma_min);
  }
  td.J_pinv = pseudo_inverse(td.J, damping);
  td.B = td.J_pinv.transpose();
  td.M = mass_matrix_joint(m, q);
  const Eigen::MatrixXd MinvJt = td.M.ldlt().solve(td.J.transpose());
  Matrix6d li = td.J * MinvJt;
  td.lambda_inv = (li + li.transpose()) / 2.0;
  return td;
}

double hamiltonian(const RobotModel& m, const PhaseState& s) {
  const Vector6d p = s.momentum();
  return 0.5 * p.dot(task_inertia_inverse(m, s.q) * p) +
         gravity_potential(m, s.q);
}

Vector6d momentum_from_joint(const RobotModel& m, const Eigen::VectorXd& q,
                             const Eigen::VectorXd& qdot) {
  if (qdot.size() != m.dof()) {
    throw DimensionError("momentum_from_joint: qdot dimension mismatch");
  }
  const Matrix6d Mt = mass_matrix_task(m, q, 0.0);
  return Mt * (body_jacobian(m, q) * qdot);
}

Vector18d hamiltonian_gradient(const RobotModel& m, const PhaseState& s,
                               double damping) {
  const TaskDynamics td = eval_task_dynamics(m, s.q, damping);
  const Vector6d p = s.momentum();
  const Vector6d eta = td.B * hamiltonian_joint_gradient(m, s.q, p);

  Vector18d grad;
  // Minimum-norm lift: grad_p = R eta_v, grad_ri = r_i x eta_w / 2, so that
  // gx' grad_g = eta exactly (gx' gx = diag(I, 2I)).
  grad.segment<3>(0) = s.g.R * eta.head<3>();
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector3d ri = s.g.R.row(i).transpose();
    grad.segment<3>(3 + 3 * i) = 0.5 * ri.cross(eta.tail<3>());
  }
  grad.segment<6>(12) = td.lambda_inv * p;
  return grad;
}

StateDerivative state_derivative(const RobotModel& m, const PhaseState& s,
                                 const Eigen::VectorXd& u, double damping) {
  check_input_dim(m, u);
  const TaskDynamics td = eval_task_dynamics(m, s.q, damping);
  const Vector6d p = s.momentum();
  const Vector6d xi = td.lambda_inv * p;
  const Eigen::Vector3d xi_v = xi.head<3>();
  const Eigen::Vector3d xi_w = xi.tail<3>();

  const Vector6d eta = td.B * hamiltonian_joint_gradient(m, s.q, p);
  const Vector6d bu = td.B * u;

  StateDerivative d;
  // pdot = R dH/dpv
  d.x_dot.segment<3>(0) = s.g.R * xi_v;
  // ridot = r_i x dH/dpw
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector3d ri = s.g.R.row(i).transpose();
    d.x_dot.segment<3>(3 + 3 * i) = ri.cross(xi_w);
  }
  // pvdot = pv x dH/dpw - R' dH/dp + bv u; the lifted gradient collapses the
  // middle term to the task gravity/inertia wrench eta_v.
  d.x_dot.segment<3>(12) = s.pv.cross(xi_w) - eta.head<3>() + bu.head<3>();
  // pwdot = pw x dH/dpw + pv x dH/dpv + sum_i r_i x dH/dri + bw u
  d.x_dot.segment<3>(15) =
      s.pw.cross(xi_w) + s.pv.cross(xi_v) - eta.tail<3>() + bu.tail<3>();

  d.q_dot = td.J_pinv * xi;
  d.xi = xi;
  return d;
}

PhaseState integrate_step(const RobotModel& m, const PhaseState& s,
                          const Eigen::VectorXd& u, double dt, double damping) {
  if (dt <= 0.0) throw StructureError("integrate_step: dt must be positive");
  const StateDerivative k1 = state_derivative(m, s, u, damping);

  PhaseState half;
  half.g = s.g * exp_twist(Twist::from_vec(k1.xi * (dt / 2.0)));
  half.pv = s.pv + (dt / 2.0) * k1.x_dot.segment<3>(12);
  half.pw = s.pw + (dt / 2.0) * k1.x_dot.segment<3>(15);
  half.q = s.q + (dt / 2.0) * k1.q_dot;

  const StateDerivative k2 = state_derivative(m, half, u, damping);

  PhaseState next;
  next.g = s.g * exp_twist(Twist::from_vec(k2.xi * dt));
  next.pv = s.pv + dt * k2.x_dot.segment<3>(12);
  next.pw = s.pw + dt * k2.x_dot.segment<3>(15);
  next.q = s.q + dt * k2.q_dot;

  // q and g are redundant; one Gauss-Newton step keeps them consistent.
  const Pose fk = forward_kinematics(m, next.q);
  const Vector6d mismatch = log_pose_vec(fk.inverse() * next.g);
  next.q += pseudo_inverse(body_jacobian(m, next.q), 1e-3) * mismatch;
  return next;
}

}  // namespace geovs
