#pragma once

#include "geovs/port_hamiltonian.hpp"

namespace geovs {

/// Energy-shaping and damping-injection gains. All three must be positive
/// definite for the closed-loop stability argument to hold.
struct Gains {
  Eigen::Matrix3d Kp = 20.0 * Eigen::Matrix3d::Identity();
  Eigen::Matrix3d KR = 8.0 * Eigen::Matrix3d::Identity();
  Matrix6d Kd = 4.0 * Matrix6d::Identity();

  bool is_valid(double tol = 1e-12) const;
};

/// Static stabilization target (g*, p* = 0).
struct TargetState {
  Pose g_star;
  Vector6d p_star = Vector6d::Zero();
};

/// Geometric pose error
///   e = [R' Kp (p - p*); ((KR R*'R - R'R* KR')^vee) / 2].
Vector6d pose_error(const Pose& g, const TargetState& target, const Gains& k);

/// Shaped Hamiltonian
///   Hd = (p-p*)' Mtilde^-1 (p-p*)/2 + (pp-pp*)' Kp (pp-pp*)/2
///        + tr(KR (I - R*'R))/2;
/// nonnegative, zero only at (g*, 0).
double desired_hamiltonian(const RobotModel& m, const PhaseState& s,
                           const TargetState& target, const Gains& k);

/// Full 18-dim gradient of the shaped Hamiltonian (flattened coordinates).
Vector18d desired_hamiltonian_gradient(const RobotModel& m,
                                       const PhaseState& s,
                                       const TargetState& target,
                                       const Gains& k);

/// u_ES = Bpinv [gx' grad_g G - px xi - e(g, g*)] with Bpinv = (B'B)^-1 B'.
Eigen::VectorXd u_energy_shaping(const RobotModel& m, const PhaseState& s,
                                 const TargetState& target, const Gains& k,
                                 double damping = 0.0);

/// Damping injection realizing the dissipation block diag(0, Kd) in the
/// closed loop: u_DI = -Bpinv Kd xi, so that B u_DI = -Kd xi exactly.
Eigen::VectorXd u_damping(const RobotModel& m, const PhaseState& s,
                          const Gains& k, double damping = 0.0);

/// Literal joint-space reading of the damping law, -Kd B' xi; kept as the
/// alternative operator ordering and exercised in tests only.
Eigen::VectorXd u_damping_joint(const RobotModel& m, const PhaseState& s,
                                const Gains& k, double damping = 0.0);

/// Norm of the matching-condition residual
///   Bperp ( J grad H - (Jd - Rd) grad Hd )
/// with Bperp an orthonormal basis of the left null space of [0; B],
/// Jd assembled from the target rotation rows, and Rd = diag(0, Kd).
/// Diagnostic only; small along converged closed-loop trajectories.
double check_matching(const RobotModel& m, const PhaseState& s,
                      const TargetState& target, const Gains& k,
                      double damping = 0.0);

/// Theorem rate -(p-p*)' Mtilde^-1 Kd Mtilde^-1 (p-p*); always <= 0.
double lyapunov_rate(const RobotModel& m, const PhaseState& s,
                     const TargetState& target, const Gains& k);

}  // namespace geovs
