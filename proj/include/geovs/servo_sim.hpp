#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "geovs/depth_transport.hpp"
#include "geovs/passivity_control.hpp"

namespace geovs {

/// Planar target feature: a rectangle with a rectangular cutout. The plane
/// occupies z = 0 of its local frame, extents centered on the origin.
struct Scene {
  Pose plane_pose;
  Eigen::Vector2d plane_extent{0.5, 0.5};
  Eigen::Vector2d hole_center{0.0, 0.0};
  Eigen::Vector2d hole_size{0.1, 0.1};

  /// Hole must lie strictly inside the plane extent.
  void validate() const;
};

/// Pinhole depth camera. One ray per pixel through the pixel center.
struct CameraModel {
  int cols = 32;
  int rows = 24;
  double focal = 16.0;
  Eigen::Vector2d principal_point{16.0, 12.0};
  double max_range = 2.0;

  void validate() const;
};

struct OtParams {
  double eps_rel = 1e-2;  // entropic eps relative to the median ground cost
  double tau = 1.0;
  double p = 2.0;
  int max_iter = 20000;
  double tol = 1e-6;
};

struct GramianParams {
  int quadrature_steps = 32;
  double refresh_geodesic = 0.05;
};

/// Everything one closed-loop experiment needs. Loaded from JSON; see
/// config/default_run.json for the schema.
struct RunConfig {
  std::string robot_path;
  Gains gains;
  MetricWeights metric;
  OtParams ot;
  GramianParams gramian;
  Scene scene;
  CameraModel camera;
  double dt = 1e-3;
  int control_period_steps = 10;
  double epsilon_converge = 1e-2;
  int max_steps = 60000;
  double torque_limit = 50.0;
  double loop_damping = 1e-3;
  bool udc_enabled = true;
  Pose target_pose;
  int pose_index = 1;                 // Appendix pose 1..4, or 0 for explicit
  std::optional<Pose> initial_pose;   // used when pose_index == 0
  std::string out_dir = "out";
  uint64_t seed = 0;

  void validate() const;
  static RunConfig load(const std::string& path);
};

/// Raycast depth image of the scene: depth = camera-frame z of the plane
/// hit, atoms through the hole or beyond max_range dropped, uniform weights
/// normalized to total mass one. Throws EmptyViewError when nothing is hit.
DepthCloud render_depth(const Scene& scene, const CameraModel& cam,
                        const Pose& g);

/// The four experiment start poses and the target, printed to two decimals
/// in their source; rotation blocks are re-orthonormalized by polar
/// projection and the applied correction distance reported per pose.
struct AppendixPoses {
  std::array<Pose, 4> initial;
  Pose target;
  std::array<double, 4> initial_correction;
  double target_correction;
};

AppendixPoses load_appendix_poses();

struct StepRecord {
  int step = 0;
  double time_s = 0.0;
  double geodesic = 0.0;
  double delta_p = 0.0;
  double delta_R = 0.0;
  Vector6d wrench = Vector6d::Zero();
  Eigen::VectorXd torques;
  double hamiltonian = 0.0;
  double desired_hamiltonian = 0.0;
  double lyapunov_rate = 0.0;
  double wasserstein = 0.0;
  double matching_residual = 0.0;
};

struct TrajectoryLog {
  std::vector<StepRecord> rows;
  int dof = 0;
  bool converged = false;
  int integrator_steps = 0;
  DepthCloud final_cloud;
  DepthCloud target_cloud;
};

/// Runs the closed visual-servo loop: the unbalanced transport map is
/// computed from the initial and target depth clouds, then each control
/// period applies u = u_ES + u_DI (+ u_DC from the current cloud) until the
/// pose geodesic drops below epsilon_converge or max_steps elapse.
/// Throws DivergenceError when the geodesic exceeds ten times its start.
TrajectoryLog run_servo(const RunConfig& cfg);

/// Writes trajectory.csv plus the final and target clouds into dir.
void write_log(const TrajectoryLog& log, const std::string& dir);

}  // namespace geovs
