#pragma once

#include <string>
#include <vector>

#include "geovs/port_hamiltonian.hpp"

namespace geovs {

/// Discrete positive measure of depth atoms supported on a camera pose.
/// Points are camera-frame; world positions go through support_pose.
struct DepthCloud {
  Pose support_pose;
  std::vector<Eigen::Vector2i> pixels;
  std::vector<Eigen::Vector3d> points;
  std::vector<double> weights;
  int cols = 0;  // resolution n
  int rows = 0;  // resolution m

  size_t size() const { return points.size(); }
  Eigen::Vector3d world_point(size_t i) const {
    return support_pose.act(points[i]);
  }

  /// weights > 0 summing to 1 within 1e-9; depths positive and within range.
  void validate(double max_range) const;

  /// Text format: header "n m" + 16 row-major pose floats, then one atom
  /// per line as "x_pixel y_pixel X Y Z weight".
  void write(const std::string& path) const;
  static DepthCloud read(const std::string& path);
};

/// Coupling returned by the unbalanced solver, with its Eq-objective value
/// (transport plus tau-weighted KL marginal penalties; the entropic term is
/// solver regularization and excluded).
struct TransportPlan {
  Eigen::MatrixXd plan;
  double cost = 0.0;
  Eigen::VectorXd row_marginal;
  Eigen::VectorXd col_marginal;
  double tau = 0.0;
  double eps = 0.0;
  int iterations = 0;
  double residual = 0.0;
  Eigen::VectorXd potential_f;  // dual potentials, reusable as warm start
  Eigen::VectorXd potential_g;
};

/// Entry (i,j) = d^p between world points i of a and j of b (Euclidean d).
Eigen::MatrixXd ground_cost(const DepthCloud& a, const DepthCloud& b, double p);

/// Unbalanced entropic OT with KL marginal relaxation, solved by
/// log-stabilized Sinkhorn scaling (exponent tau/(tau+eps)). Converged when
/// the dual-potential sup-norm change drops below tol; throws
/// ConvergenceError (carrying the last change) otherwise.
TransportPlan sinkhorn_unbalanced(const DepthCloud& mu, const DepthCloud& nu,
                                  const Eigen::MatrixXd& cost, double eps,
                                  double tau, int max_iter = 5000,
                                  double tol = 1e-9,
                                  const TransportPlan* warm_start = nullptr);

/// Barycentric projection of the plan. Atoms whose row mass fell below
/// 1e-12 are reported unmapped (mass destroyed by the relaxation).
struct DisplacementField {
  std::vector<Eigen::Vector3d> source_world;
  std::vector<Eigen::Vector3d> target_world;  // barycentric targets
  std::vector<Eigen::Vector3d> displacement;
  std::vector<bool> mapped;
  std::vector<double> weights;
};

DisplacementField transport_map(const TransportPlan& plan,
                                const DepthCloud& source,
                                const DepthCloud& target);

/// W_c(t0,t1) = int Psi(l) B B' Psi^-1(l) dl by composite Simpson with
/// Psi = expm(A l); result symmetrized.
Eigen::MatrixXd controllability_gramian(const Eigen::MatrixXd& A,
                                        const Eigen::MatrixXd& B, double t0,
                                        double t1, int quadrature_steps);

/// Full-horizon, to-go and prior Gramians of the frozen linearization,
/// together with the data they were built from.
struct GramianPair {
  Matrix18d Wc_full;
  Matrix18d Wc_togo;
  Matrix18d Wc_prior;
  Matrix18d A;                      // frozen interconnection
  Eigen::MatrixXd B_full;           // 18 x n input matrix [0; B]
  double t = 0.0;                   // normalized time of construction
};

GramianPair make_gramian_pair(const Matrix18d& A, const Eigen::MatrixXd& B_full,
                              double t, int quadrature_steps);

struct UdcOptions {
  double torque_limit = 50.0;
  int quadrature_steps = 32;
};

struct UdcDiagnostics {
  int gramian_rank = 0;
  bool clamped = false;
  bool degenerate_fit = false;
};

/// Reduction of the displacement field to a flattened-state displacement:
/// mass-weighted mean translation plus best-fit (Kabsch) rotation about the
/// source centroid, applied to the camera pose; momentum block zero.
Vector18d state_displacement(const DisplacementField& field, const Pose& camera,
                             bool* degenerate = nullptr);

/// Steering input u_DC = B' Psi' Wc^+ [T* o T_t^-1 - T_t^-1] evaluated at
/// the flattened state, with T_t the Gramian interpolation of the frozen
/// dynamics and T* the transport-induced state displacement. Componentwise
/// torque clamp at opts.torque_limit.
Eigen::VectorXd u_dc(const RobotModel& m, const PhaseState& s, double t,
                     const DisplacementField& field, const GramianPair& grams,
                     const UdcOptions& opts, double damping = 0.0,
                     UdcDiagnostics* diag = nullptr);

/// (unbalanced cost)^(1/p).
double wasserstein_distance(const DepthCloud& mu, const DepthCloud& nu,
                            double p, double eps, double tau,
                            int max_iter = 5000, double tol = 1e-9);

}  // namespace geovs
