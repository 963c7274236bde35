#pragma once

#include "geovs/robot_model.hpp"

namespace geovs {

using Vector12d = Eigen::Matrix<double, 12, 1>;
using Vector18d = Eigen::Matrix<double, 18, 1>;
using Matrix18d = Eigen::Matrix<double, 18, 18>;

/// Task-space phase point: end-effector pose, body-frame conjugate momentum
/// (pv, pw), and the joint vector carried along for M(q), B(q).
struct PhaseState {
  Pose g;
  Eigen::Vector3d pv = Eigen::Vector3d::Zero();
  Eigen::Vector3d pw = Eigen::Vector3d::Zero();
  Eigen::VectorXd q;

  Vector6d momentum() const {
    Vector6d p;
    p << pv, pw;
    return p;
  }
};

/// Flattened pose coordinates [p; r1; r2; r3] with r_i the rows of R.
Vector12d flatten_pose(const Pose& g);

/// Flattened state [p; r1; r2; r3; pv; pw].
Vector18d flatten_state(const PhaseState& s);

/// Blocks of the skew interconnection matrix
///   J(g, p) = [[0, gx], [-gx', px]].
struct Interconnection {
  Eigen::Matrix<double, 12, 6> gx;
  Matrix6d px;

  Matrix18d assembled() const;
};

Interconnection interconnection(const PhaseState& s);

/// Per-configuration quantities shared by the plant and the controller.
/// damping feeds the pseudo-inverse behind J_pinv and B = J_pinv'.
struct TaskDynamics {
  Eigen::MatrixXd J;       // 6 x n body Jacobian
  Eigen::MatrixXd J_pinv;  // n x 6
  Eigen::MatrixXd B;       // 6 x n actuation map J_pinv'
  Eigen::MatrixXd M;       // n x n joint mass matrix
  Matrix6d lambda_inv;     // task inertia inverse J M^-1 J'
  double sigma_min = 0.0;
};

TaskDynamics eval_task_dynamics(const RobotModel& m, const Eigen::VectorXd& q,
                                double damping = 0.0);

/// H = p' Mtilde^-1(q) p / 2 + G(q).
double hamiltonian(const RobotModel& m, const PhaseState& s);

/// p = Mtilde(q) J_b(q) qdot (exact pseudo-inverse).
Vector6d momentum_from_joint(const RobotModel& m, const Eigen::VectorXd& q,
                             const Eigen::VectorXd& qdot);

/// Full 18-dim gradient of H. The pose block is the minimum-norm lift of
/// the task gradient Jpinv' dH/dq, so that gx' grad_g H recovers it; the
/// q-derivative includes the configuration dependence of the task inertia
/// (central differences), which the conservation identity requires.
Vector18d hamiltonian_gradient(const RobotModel& m, const PhaseState& s,
                               double damping = 0.0);

struct StateDerivative {
  Vector18d x_dot;
  Eigen::VectorXd q_dot;  // Jpinv xi, carried for the joint bookkeeping
  Vector6d xi;            // body twist Mtilde^-1 p
};

/// Flattened dynamics xdot = J(g,p) grad H + [0; B(q)] u with B = Jpinv'.
StateDerivative state_derivative(const RobotModel& m, const PhaseState& s,
                                 const Eigen::VectorXd& u, double damping = 0.0);

/// Explicit midpoint step with Lie-group retraction: momenta advance by RK2,
/// the pose by g <- g exp(xi_mid dt), q by the same scheme plus one damped
/// Gauss-Newton refinement pulling forward_kinematics(q) back onto g.
PhaseState integrate_step(const RobotModel& m, const PhaseState& s,
                          const Eigen::VectorXd& u, double dt,
                          double damping = 0.0);

}  // namespace geovs
