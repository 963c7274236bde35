#include "geovs/servo_sim.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace geovs {

namespace {

double matrix_median(const Eigen::MatrixXd& m) {
  std::vector<double> values(m.data(), m.data() + m.size());
  const size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  return values[mid];
}

Eigen::Matrix3d diag_weight(const nlohmann::json& j) {
  if (j.is_number()) {
    return j.get<double>() * Eigen::Matrix3d::Identity();
  }
  if (j.is_array() && j.size() == 3) {
    return Eigen::Vector3d(j[0].get<double>(), j[1].get<double>(),
                           j[2].get<double>())
        .asDiagonal();
  }
  throw StructureError("config: expected scalar or 3-vector weight");
}

Matrix6d diag_weight6(const nlohmann::json& j) {
  if (j.is_number()) {
    return j.get<double>() * Matrix6d::Identity();
  }
  if (j.is_array() && j.size() == 6) {
    Vector6d d;
    for (int i = 0; i < 6; ++i) d[i] = j[i].get<double>();
    return d.asDiagonal();
  }
  throw StructureError("config: expected scalar or 6-vector weight");
}

Pose pose_from_flat(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 16) {
    throw StructureError("config: pose must be 16 row-major floats");
  }
  Eigen::Matrix4d m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m(r, c) = j[4 * r + c].get<double>();
  return Pose::from_matrix(m, 1e-6);
}

Pose orthonormalized(const Eigen::Matrix3d& R_printed, const Eigen::Vector3d& p,
                     double* correction) {
  Pose g;
  g.R = project_to_so3(R_printed);
  g.p = p;
  if (correction) *correction = (g.R - R_printed).norm();
  return g;
}

void format_double(std::string& line, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  line += buf;
}

}  // namespace

void Scene::validate() const {
  if (plane_extent.minCoeff() <= 0.0 || hole_size.minCoeff() <= 0.0) {
    throw StructureError("Scene: extents must be positive");
  }
  for (int axis = 0; axis < 2; ++axis) {
    const double lo = hole_center[axis] - hole_size[axis] / 2.0;
    const double hi = hole_center[axis] + hole_size[axis] / 2.0;
    if (lo <= -plane_extent[axis] / 2.0 || hi >= plane_extent[axis] / 2.0) {
      throw StructureError("Scene: hole must lie strictly inside the plane");
    }
  }
  if (!plane_pose.satisfies_invariants(1e-6)) {
    throw StructureError("Scene: plane pose violates pose invariants");
  }
}

void CameraModel::validate() const {
  if (cols < 8 || rows < 8) {
    throw StructureError("CameraModel: resolution must be at least 8x8");
  }
  if (focal <= 0.0 || max_range <= 0.0) {
    throw StructureError("CameraModel: focal and max_range must be positive");
  }
}

void RunConfig::validate() const {
  scene.validate();
  camera.validate();
  if (!gains.is_valid()) {
    throw StructureError("RunConfig: gain matrices must be positive definite");
  }
  if (!metric.is_valid()) {
    throw StructureError("RunConfig: metric weights must be positive definite");
  }
  if (dt <= 0.0 || epsilon_converge <= 0.0 || ot.tol <= 0.0 || ot.p < 1.0 ||
      ot.eps_rel <= 0.0 || ot.tau <= 0.0 || torque_limit <= 0.0) {
    throw StructureError("RunConfig: tolerances and OT parameters must be positive");
  }
  if (max_steps < 1 || control_period_steps < 1) {
    throw StructureError("RunConfig: step counts must be positive");
  }
  if (pose_index < 0 || pose_index > 4) {
    throw StructureError("RunConfig: pose index must be 0 (explicit) or 1..4");
  }
  if (pose_index == 0 && !initial_pose) {
    throw StructureError("RunConfig: explicit initial pose missing");
  }
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StructureError("RunConfig::load: cannot open " + path);
  nlohmann::json j;
  in >> j;

  RunConfig cfg;
  cfg.robot_path = j.at("robot").get<std::string>();
  {
    // Relative robot paths resolve against the config file location.
    namespace fs = std::filesystem;
    fs::path rp(cfg.robot_path);
    if (rp.is_relative()) {
      cfg.robot_path = (fs::path(path).parent_path() / rp).string();
    }
  }

  if (j.contains("gains")) {
    const auto& gj = j["gains"];
    if (gj.contains("kp")) cfg.gains.Kp = diag_weight(gj["kp"]);
    if (gj.contains("kr")) cfg.gains.KR = diag_weight(gj["kr"]);
    if (gj.contains("kd")) cfg.gains.Kd = diag_weight6(gj["kd"]);
  }
  if (j.contains("metric")) {
    const auto& mj = j["metric"];
    if (mj.contains("gp")) cfg.metric.Gp = diag_weight(mj["gp"]);
    if (mj.contains("gr")) cfg.metric.GR = diag_weight(mj["gr"]);
  }
  if (j.contains("ot")) {
    const auto& oj = j["ot"];
    if (oj.contains("eps_rel")) cfg.ot.eps_rel = oj["eps_rel"].get<double>();
    if (oj.contains("tau")) cfg.ot.tau = oj["tau"].get<double>();
    if (oj.contains("p")) cfg.ot.p = oj["p"].get<double>();
    if (oj.contains("max_iter")) cfg.ot.max_iter = oj["max_iter"].get<int>();
    if (oj.contains("tol")) cfg.ot.tol = oj["tol"].get<double>();
  }
  if (j.contains("gramian")) {
    const auto& gj = j["gramian"];
    if (gj.contains("quadrature_steps")) {
      cfg.gramian.quadrature_steps = gj["quadrature_steps"].get<int>();
    }
    if (gj.contains("refresh_geodesic")) {
      cfg.gramian.refresh_geodesic = gj["refresh_geodesic"].get<double>();
    }
  }
  if (j.contains("scene")) {
    const auto& sj = j["scene"];
    cfg.scene.plane_pose = pose_from_flat(sj.at("plane_pose"));
    auto vec2 = [](const nlohmann::json& a) {
      return Eigen::Vector2d(a.at(0).get<double>(), a.at(1).get<double>());
    };
    if (sj.contains("plane_extent")) cfg.scene.plane_extent = vec2(sj["plane_extent"]);
    if (sj.contains("hole_center")) cfg.scene.hole_center = vec2(sj["hole_center"]);
    if (sj.contains("hole_size")) cfg.scene.hole_size = vec2(sj["hole_size"]);
  }
  if (j.contains("camera")) {
    const auto& cj = j["camera"];
    if (cj.contains("cols")) cfg.camera.cols = cj["cols"].get<int>();
    if (cj.contains("rows")) cfg.camera.rows = cj["rows"].get<int>();
    if (cj.contains("focal")) cfg.camera.focal = cj["focal"].get<double>();
    if (cj.contains("principal_point")) {
      cfg.camera.principal_point =
          Eigen::Vector2d(cj["principal_point"][0].get<double>(),
                          cj["principal_point"][1].get<double>());
    }
    if (cj.contains("max_range")) cfg.camera.max_range = cj["max_range"].get<double>();
  }

  if (j.contains("dt")) cfg.dt = j["dt"].get<double>();
  if (j.contains("control_period_steps")) {
    cfg.control_period_steps = j["control_period_steps"].get<int>();
  }
  if (j.contains("epsilon_converge")) {
    cfg.epsilon_converge = j["epsilon_converge"].get<double>();
  }
  if (j.contains("max_steps")) cfg.max_steps = j["max_steps"].get<int>();
  if (j.contains("torque_limit")) cfg.torque_limit = j["torque_limit"].get<double>();
  if (j.contains("loop_damping")) cfg.loop_damping = j["loop_damping"].get<double>();
  if (j.contains("udc_enabled")) cfg.udc_enabled = j["udc_enabled"].get<bool>();
  if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();

  const AppendixPoses app = load_appendix_poses();
  if (!j.contains("target_pose") || j["target_pose"] == "appendix") {
    cfg.target_pose = app.target;
  } else {
    cfg.target_pose = pose_from_flat(j["target_pose"]);
  }
  if (j.contains("pose")) cfg.pose_index = j["pose"].get<int>();
  if (j.contains("initial_pose")) {
    cfg.initial_pose = pose_from_flat(j["initial_pose"]);
    cfg.pose_index = 0;
  }
  cfg.validate();
  return cfg;
}

DepthCloud render_depth(const Scene& scene, const CameraModel& cam,
                        const Pose& g) {
  scene.validate();
  cam.validate();
  DepthCloud cloud;
  cloud.support_pose = g;
  cloud.cols = cam.cols;
  cloud.rows = cam.rows;

  const Eigen::Vector3d normal_w = scene.plane_pose.R.col(2);
  const Eigen::Vector3d plane_p = scene.plane_pose.p;

  for (int py = 0; py < cam.rows; ++py) {
    for (int px = 0; px < cam.cols; ++px) {
      const Eigen::Vector3d dir_cam(
          (px + 0.5 - cam.principal_point.x()) / cam.focal,
          (py + 0.5 - cam.principal_point.y()) / cam.focal, 1.0);
      const Eigen::Vector3d dir_w = g.R * dir_cam;
      const double denom = normal_w.dot(dir_w);
      if (std::abs(denom) < 1e-12) continue;
      const double s = normal_w.dot(plane_p - g.p) / denom;
      // dir_cam.z == 1, so s is the camera-frame depth of the hit.
      if (s <= 0.0 || s > cam.max_range) continue;
      const Eigen::Vector3d hit_w = g.p + s * dir_w;
      const Eigen::Vector3d local =
          scene.plane_pose.R.transpose() * (hit_w - plane_p);
      if (std::abs(local.x()) > scene.plane_extent.x() / 2.0 ||
          std::abs(local.y()) > scene.plane_extent.y() / 2.0) {
        continue;
      }
      const bool in_hole =
          std::abs(local.x() - scene.hole_center.x()) <= scene.hole_size.x() / 2.0 &&
          std::abs(local.y() - scene.hole_center.y()) <= scene.hole_size.y() / 2.0;
      if (in_hole) continue;
      cloud.pixels.emplace_back(px, py);
      cloud.points.push_back(s * dir_cam);
    }
  }
  if (cloud.points.empty()) {
    throw EmptyViewError("render_depth: feature out of frame");
  }
  cloud.weights.assign(cloud.points.size(), 1.0 / cloud.points.size());
  return cloud;
}

AppendixPoses load_appendix_poses() {
  auto mat3 = [](std::initializer_list<double> v) {
    Eigen::Matrix3d m;
    auto it = v.begin();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m(r, c) = *it++;
    return m;
  };

  AppendixPoses out;
  out.initial[0] = orthonormalized(
      mat3({-0.63, -0.47, -0.61, -0.25, 0.88, -0.42, 0.73, -0.11, -0.67}),
      {-0.16, 0.49, 0.34}, &out.initial_correction[0]);
  out.initial[1] = orthonormalized(
      mat3({0.05, -0.816, -0.58, -0.85, 0.27, -0.45, 0.52, 0.51, -0.68}),
      {-0.07, 0.54, 0.15}, &out.initial_correction[1]);
  out.initial[2] = orthonormalized(
      mat3({-0.18, -0.62, -0.76, -0.98, 0.2, -0.08, 0.1, 0.76, -0.64}),
      {-0.1, 0.34, 0.31}, &out.initial_correction[2]);
  out.initial[3] = orthonormalized(
      mat3({0.28, 0.25, -0.93, 0.65, 0.66, 0.38, 0.7, -0.71, 0.03}),
      {-0.05, 0.21, 0.06}, &out.initial_correction[3]);
  out.target = orthonormalized(
      mat3({0.01, 0.07, -1.0, 0.01, 1.0, 0.07, 1.0, -0.01, 0.01}),
      {-0.27, 0.31, 0.038}, &out.target_correction);
  return out;
}

namespace {

struct LoopMeasurement {
  DepthCloud cloud;
  TransportPlan plan;
  DisplacementField field;
  double wasserstein = 0.0;
};

LoopMeasurement measure(const RunConfig& cfg, const Pose& g,
                        const DepthCloud& target_cloud, double eps,
                        const TransportPlan* warm) {
  LoopMeasurement m;
  m.cloud = render_depth(cfg.scene, cfg.camera, g);
  const Eigen::MatrixXd C = ground_cost(m.cloud, target_cloud, cfg.ot.p);
  const TransportPlan* usable_warm =
      warm && warm->potential_f.size() == static_cast<Eigen::Index>(m.cloud.size())
          ? warm
          : nullptr;
  m.plan = sinkhorn_unbalanced(m.cloud, target_cloud, C, eps, cfg.ot.tau,
                               cfg.ot.max_iter, cfg.ot.tol, usable_warm);
  m.field = transport_map(m.plan, m.cloud, target_cloud);
  m.wasserstein = std::pow(std::max(m.plan.cost, 0.0), 1.0 / cfg.ot.p);
  return m;
}

StepRecord make_record(const RobotModel& model, const RunConfig& cfg,
                       const PhaseState& s, const TargetState& target,
                       int step, const Eigen::VectorXd& torques,
                       double wasserstein) {
  StepRecord rec;
  rec.step = step;
  rec.time_s = step * cfg.dt;
  rec.geodesic = geodesic_distance(s.g, target.g_star, cfg.metric);
  rec.delta_p = position_distance(s.g.p, target.g_star.p, cfg.metric.Gp);
  rec.delta_R = rotation_distance(s.g.R, target.g_star.R, cfg.metric.GR);
  rec.torques = torques;
  const TaskDynamics td = eval_task_dynamics(model, s.q, cfg.loop_damping);
  rec.wrench = td.B * torques;
  rec.hamiltonian = hamiltonian(model, s);
  rec.desired_hamiltonian = desired_hamiltonian(model, s, target, cfg.gains);
  rec.lyapunov_rate = lyapunov_rate(model, s, target, cfg.gains);
  rec.wasserstein = wasserstein;
  rec.matching_residual =
      check_matching(model, s, target, cfg.gains, cfg.loop_damping);
  return rec;
}

}  // namespace

TrajectoryLog run_servo(const RunConfig& cfg) {
  cfg.validate();
  const RobotModel model = RobotModel::load(cfg.robot_path);
  const AppendixPoses app = load_appendix_poses();

  Pose initial_req;
  if (cfg.pose_index >= 1) {
    initial_req = app.initial[cfg.pose_index - 1];
  } else {
    initial_req = *cfg.initial_pose;
  }

  // Reachability check: both endpoints must admit an IK solution.
  const Eigen::VectorXd q_star = solve_ik_multi_seed(model, cfg.target_pose);
  const Eigen::VectorXd q0 = solve_ik_multi_seed(model, initial_req);

  const TargetState target{forward_kinematics(model, q_star), Vector6d::Zero()};
  const DepthCloud target_cloud = render_depth(cfg.scene, cfg.camera, target.g_star);

  PhaseState s;
  s.g = forward_kinematics(model, q0);
  s.q = q0;

  TrajectoryLog log;
  log.dof = model.dof();
  log.target_cloud = target_cloud;

  const double d0 = geodesic_distance(s.g, target.g_star, cfg.metric);
  double d = d0;

  // Entropic scale is pinned to the initial view so every later solve of the
  // loop sees the same regularization.
  LoopMeasurement meas;
  meas.cloud = render_depth(cfg.scene, cfg.camera, s.g);
  const double eps =
      cfg.ot.eps_rel *
      std::max(matrix_median(ground_cost(meas.cloud, target_cloud, cfg.ot.p)),
               1e-12);
  meas = measure(cfg, s.g, target_cloud, eps, nullptr);

  const UdcOptions udc_opts{cfg.torque_limit, cfg.gramian.quadrature_steps};
  double t_norm = 0.0;
  auto build_grams = [&](const PhaseState& st, double t) {
    Eigen::MatrixXd B_full = Eigen::MatrixXd::Zero(18, model.dof());
    B_full.block(12, 0, 6, model.dof()) =
        eval_task_dynamics(model, st.q, cfg.loop_damping).B;
    return make_gramian_pair(interconnection(st).assembled(), B_full, t,
                             cfg.gramian.quadrature_steps);
  };
  GramianPair grams = build_grams(s, t_norm);
  Pose grams_pose = s.g;

  int step = 0;
  bool converged = d <= cfg.epsilon_converge;
  while (!converged && step < cfg.max_steps) {
    Eigen::VectorXd u = u_energy_shaping(model, s, target, cfg.gains,
                                         cfg.loop_damping) +
                        u_damping(model, s, cfg.gains, cfg.loop_damping);
    if (cfg.udc_enabled) {
      u += u_dc(model, s, t_norm, meas.field, grams, udc_opts, cfg.loop_damping);
    }
    for (int i = 0; i < u.size(); ++i) {
      u[i] = std::clamp(u[i], -cfg.torque_limit, cfg.torque_limit);
    }

    log.rows.push_back(
        make_record(model, cfg, s, target, step, u, meas.wasserstein));

    for (int j = 0; j < cfg.control_period_steps && step < cfg.max_steps; ++j) {
      s = integrate_step(model, s, u, cfg.dt, cfg.loop_damping);
      ++step;
    }

    d = geodesic_distance(s.g, target.g_star, cfg.metric);
    if (d > 10.0 * std::max(d0, 1e-12)) {
      throw DivergenceError("run_servo: geodesic exceeded 10x initial distance",
                            step);
    }
    if (d <= cfg.epsilon_converge) {
      converged = true;
      break;
    }

    meas = measure(cfg, s.g, target_cloud, eps, &meas.plan);
    t_norm = std::max(t_norm, std::clamp(1.0 - d / d0, 0.0, 1.0));
    if (cfg.udc_enabled &&
        (geodesic_distance(s.g, grams_pose, cfg.metric) >
             cfg.gramian.refresh_geodesic ||
         std::abs(t_norm - grams.t) > cfg.gramian.refresh_geodesic)) {
      grams = build_grams(s, t_norm);
      grams_pose = s.g;
    }
  }

  // Final row describes the terminal state; no control is applied there.
  meas = measure(cfg, s.g, target_cloud, eps, &meas.plan);
  log.rows.push_back(make_record(model, cfg, s, target, step,
                                 Eigen::VectorXd::Zero(model.dof()),
                                 meas.wasserstein));
  log.converged = converged;
  log.integrator_steps = step;
  log.final_cloud = meas.cloud;
  return log;
}

void write_log(const TrajectoryLog& log, const std::string& dir) {
  if (log.rows.empty()) {
    throw StructureError("write_log: empty trajectory log");
  }
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  const std::string csv_path = (fs::path(dir) / "trajectory.csv").string();
  std::ofstream out(csv_path);
  if (!out) throw StructureError("write_log: cannot write " + csv_path);

  std::string header =
      "step,time_s,geodesic,delta_p,delta_R,"
      "wrench_vx,wrench_vy,wrench_vz,wrench_wx,wrench_wy,wrench_wz";
  for (int i = 1; i <= log.dof; ++i) header += ",tau_" + std::to_string(i);
  header += ",H,H_d,lyapunov_rate,wasserstein,matching_residual";
  out << header << "\n";

  for (const StepRecord& rec : log.rows) {
    std::string line = std::to_string(rec.step);
    auto push = [&line](double v) {
      line += ",";
      format_double(line, v);
    };
    push(rec.time_s);
    push(rec.geodesic);
    push(rec.delta_p);
    push(rec.delta_R);
    for (int i = 0; i < 6; ++i) push(rec.wrench[i]);
    for (int i = 0; i < rec.torques.size(); ++i) push(rec.torques[i]);
    push(rec.hamiltonian);
    push(rec.desired_hamiltonian);
    push(rec.lyapunov_rate);
    push(rec.wasserstein);
    push(rec.matching_residual);
    out << line << "\n";
  }
  out.close();

  log.final_cloud.write((fs::path(dir) / "cloud_final.txt").string());
  log.target_cloud.write((fs::path(dir) / "cloud_target.txt").string());
}

}  // namespace geovs
