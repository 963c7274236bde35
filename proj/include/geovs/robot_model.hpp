#pragma once

#include <string>
#include <vector>

#include "geovs/lie_se3.hpp"

namespace geovs {

/// Jacobian rank threshold below which task-space operations refuse to run.
constexpr double kSingularTol = 1e-8;

/// Serial manipulator in product-of-exponentials form. Joint twists are
/// expressed in the base frame at the zero configuration. Link frames are
/// base-aligned at zero configuration: link_coms are zero-configuration
/// base coordinates and link_inertias are taken about the COM in those axes.
struct RobotModel {
  std::vector<Twist> joint_twists;
  Pose g_zero;
  std::vector<double> link_masses;
  std::vector<Eigen::Vector3d> link_coms;
  std::vector<Eigen::Matrix3d> link_inertias;
  Eigen::Vector3d gravity{0.0, 0.0, -9.81};

  int dof() const { return static_cast<int>(joint_twists.size()); }

  /// Throws StructureError on a malformed model (non-unit joint axes,
  /// non-SPD inertias, mismatched array lengths).
  void validate() const;

  /// Parses the JSON robot description (see config/robot_6dof.json).
  static RobotModel load(const std::string& path);
};

struct JointState {
  Eigen::VectorXd q;
  Eigen::VectorXd qdot;
};

/// g(q) = (prod_i exp(xi_i q_i)) g_zero, ordered joint 1 -> n.
Pose forward_kinematics(const RobotModel& m, const Eigen::VectorXd& q);

/// Body Jacobian: vee(g^-1 gdot) = J_b(q) qdot.
Eigen::MatrixXd body_jacobian(const RobotModel& m, const Eigen::VectorXd& q);

/// damping = 0: Moore-Penrose via SVD, singular values below 1e-10 zeroed.
/// damping > 0: damped least squares J' (J J' + damping^2 I)^-1.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& J, double damping);

/// M(q) = sum_i J_i' diag(m_i I, I_i) J_i over link COM body Jacobians.
Eigen::MatrixXd mass_matrix_joint(const RobotModel& m, const Eigen::VectorXd& q);

/// Mtilde(q) = Jpinv' M Jpinv. Throws SingularityError when the body
/// Jacobian loses rank.
Matrix6d mass_matrix_task(const RobotModel& m, const Eigen::VectorXd& q,
                          double damping = 0.0);

/// Task-space inertia inverse Jb M^-1 Jb'; equals mass_matrix_task(q,0)^-1
/// for a full-rank square Jacobian and needs no pseudo-inverse.
Matrix6d task_inertia_inverse(const RobotModel& m, const Eigen::VectorXd& q);

/// sum_i m_i (-gravity) . com_i(q), joules.
double gravity_potential(const RobotModel& m, const Eigen::VectorXd& q);

/// Central finite difference of gravity_potential, step 1e-6.
Eigen::VectorXd gravity_gradient_joint(const RobotModel& m,
                                       const Eigen::VectorXd& q);

/// Jpinv' dG/dq: the gravity wrench in SE(3) task coordinates.
Vector6d gravity_gradient_task(const RobotModel& m, const Eigen::VectorXd& q,
                               double damping = 0.0);

struct IkOptions {
  int max_iter = 300;
  double tol = 1e-12;
  double damping = 1e-3;
  double max_step = 0.5;
};

/// Damped Gauss-Newton inverse kinematics from a single seed.
/// Throws ConvergenceError when the residual stalls above tol.
Eigen::VectorXd solve_ik(const RobotModel& m, const Pose& target,
                         const Eigen::VectorXd& q_seed,
                         const IkOptions& opts = {});

/// solve_ik over a deterministic seed schedule; used for the reachability
/// check at config load.
Eigen::VectorXd solve_ik_multi_seed(const RobotModel& m, const Pose& target,
                                    const IkOptions& opts = {});

}  // namespace geovs
