#include "geovs/robot_model.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace geovs {

namespace {

void check_dim(const RobotModel& m, const Eigen::VectorXd& q, const char* op) {
  if (q.size() != m.dof()) {
    throw DimensionError(std::string(op) + ": expected " +
                         std::to_string(m.dof()) + " joint values, got " +
                         std::to_string(q.size()));
  }
}

/// Prefix products P_i = exp(xi_1 q_1) ... exp(xi_i q_i), P_0 = identity.
std::vector<Pose> prefix_products(const RobotModel& m, const Eigen::VectorXd& q) {
  std::vector<Pose> prefix(m.dof() + 1);
  prefix[0] = Pose::Identity();
  for (int i = 0; i < m.dof(); ++i) {
    prefix[i + 1] = prefix[i] * exp_twist(m.joint_twists[i], q[i]);
  }
  return prefix;
}

/// Spatial Jacobian columns S_j = Ad_{P_{j-1}} xi_j.
Eigen::MatrixXd spatial_columns(const RobotModel& m,
                                const std::vector<Pose>& prefix) {
  Eigen::MatrixXd S(6, m.dof());
  for (int j = 0; j < m.dof(); ++j) {
    S.col(j) = adjoint(prefix[j]) * m.joint_twists[j].vec();
  }
  return S;
}

double smallest_singular_value(const Eigen::MatrixXd& J) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
  return svd.singularValues().minCoeff();
}

}  // namespace

void RobotModel::validate() const {
  const size_t n = joint_twists.size();
  if (n < 1) throw StructureError("RobotModel: at least one joint required");
  if (link_masses.size() != n || link_coms.size() != n ||
      link_inertias.size() != n) {
    throw StructureError("RobotModel: per-link arrays must match joint count");
  }
  for (size_t i = 0; i < n; ++i) {
    const Twist& t = joint_twists[i];
    const bool revolute = std::abs(t.w.norm() - 1.0) <= 1e-9;
    const bool prismatic = t.w.norm() <= 1e-12 && std::abs(t.v.norm() - 1.0) <= 1e-9;
    if (!revolute && !prismatic) {
      throw StructureError("RobotModel: joint " + std::to_string(i + 1) +
                           " twist is neither unit-revolute nor unit-prismatic");
    }
    if (link_masses[i] <= 0.0) {
      throw StructureError("RobotModel: link " + std::to_string(i + 1) +
                           " mass must be positive");
    }
    const Eigen::Matrix3d& I = link_inertias[i];
    if ((I - I.transpose()).norm() > 1e-12) {
      throw StructureError("RobotModel: link " + std::to_string(i + 1) +
                           " inertia must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(I);
    if (es.eigenvalues().minCoeff() <= 0.0) {
      throw StructureError("RobotModel: link " + std::to_string(i + 1) +
                           " inertia must be positive definite");
    }
  }
  if (!g_zero.satisfies_invariants()) {
    throw StructureError("RobotModel: g_zero violates pose invariants");
  }
}

RobotModel RobotModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StructureError("RobotModel::load: cannot open " + path);
  nlohmann::json j;
  in >> j;

  auto vec3 = [](const nlohmann::json& a) {
    return Eigen::Vector3d(a.at(0).get<double>(), a.at(1).get<double>(),
                           a.at(2).get<double>());
  };

  RobotModel m;
  if (j.contains("gravity")) m.gravity = vec3(j["gravity"]);

  const auto& gz = j.at("g_zero");
  if (gz.size() != 16) {
    throw StructureError("RobotModel::load: g_zero must be 16 row-major floats");
  }
  Eigen::Matrix4d gm;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) gm(r, c) = gz.at(4 * r + c).get<double>();
  m.g_zero = Pose::from_matrix(gm);

  for (const auto& joint : j.at("joints")) {
    m.joint_twists.push_back(Twist{vec3(joint.at("v")), vec3(joint.at("omega"))});
    m.link_masses.push_back(joint.at("mass").get<double>());
    m.link_coms.push_back(vec3(joint.at("com")));
    const Eigen::Vector3d d = vec3(joint.at("inertia_diag"));
    m.link_inertias.push_back(d.asDiagonal());
  }
  m.validate();
  return m;
}

Pose forward_kinematics(const RobotModel& m, const Eigen::VectorXd& q) {
  check_dim(m, q, "forward_kinematics");
  return prefix_products(m, q).back() * m.g_zero;
}

Eigen::MatrixXd body_jacobian(const RobotModel& m, const Eigen::VectorXd& q) {
  check_dim(m, q, "body_jacobian");
  const auto prefix = prefix_products(m, q);
  const Eigen::MatrixXd S = spatial_columns(m, prefix);
  const Pose g = prefix.back() * m.g_zero;
  return adjoint(g.inverse()) * S;
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& J, double damping) {
  if (damping > 0.0) {
    const Eigen::MatrixXd JJt =
        J * J.transpose() +
        damping * damping * Eigen::MatrixXd::Identity(J.rows(), J.rows());
    return J.transpose() * JJt.ldlt().solve(
                               Eigen::MatrixXd::Identity(J.rows(), J.rows()));
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      J, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::VectorXd sigma_inv = svd.singularValues();
  for (int i = 0; i < sigma_inv.size(); ++i) {
    sigma_inv[i] = sigma_inv[i] > 1e-10 ? 1.0 / sigma_inv[i] : 0.0;
  }
  return svd.matrixV() * sigma_inv.asDiagonal() * svd.matrixU().transpose();
}

Eigen::MatrixXd mass_matrix_joint(const RobotModel& m, const Eigen::VectorXd& q) {
  check_dim(m, q, "mass_matrix_joint");
  const int n = m.dof();
  const auto prefix = prefix_products(m, q);
  const Eigen::MatrixXd S = spatial_columns(m, prefix);

  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    // COM frame of link i: base-aligned at zero, rigidly attached to joint i.
    const Pose com_frame = prefix[i + 1] * Pose::Translation(m.link_coms[i]);
    const Matrix6d ad_inv = adjoint(com_frame.inverse());
    Eigen::MatrixXd Ji = Eigen::MatrixXd::Zero(6, n);
    for (int jcol = 0; jcol <= i; ++jcol) {
      Ji.col(jcol) = ad_inv * S.col(jcol);
    }
    Matrix6d G = Matrix6d::Zero();
    G.block<3, 3>(0, 0) = m.link_masses[i] * Eigen::Matrix3d::Identity();
    G.block<3, 3>(3, 3) = m.link_inertias[i];
    M.noalias() += Ji.transpose() * G * Ji;
  }
  return M;
}

Matrix6d mass_matrix_task(const RobotModel& m, const Eigen::VectorXd& q,
                          double damping) {
  const Eigen::MatrixXd J = body_jacobian(m, q);
  const double sigma = smallest_singular_value(J);
  if (J.rows() > J.cols() || sigma < kSingularTol) {
    throw SingularityError("mass_matrix_task: rank-deficient body Jacobian",
                           sigma);
  }
  const Eigen::MatrixXd Jp = pseudo_inverse(J, damping);
  const Eigen::MatrixXd M = mass_matrix_joint(m, q);
  return Jp.transpose() * M * Jp;
}

Matrix6d task_inertia_inverse(const RobotModel& m, const Eigen::VectorXd& q) {
  const Eigen::MatrixXd J = body_jacobian(m, q);
  const double sigma = smallest_singular_value(J);
  if (sigma < kSingularTol) {
    throw SingularityError("task_inertia_inverse: rank-deficient body Jacobian",
                           sigma);
  }
  const Eigen::MatrixXd M = mass_matrix_joint(m, q);
  const Eigen::MatrixXd MinvJt = M.ldlt().solve(J.transpose());
  Matrix6d lambda_inv = J * MinvJt;
  return (lambda_inv + lambda_inv.transpose()) / 2.0;
}

double gravity_potential(const RobotModel& m, const Eigen::VectorXd& q) {
  check_dim(m, q, "gravity_potential");
  const auto prefix = prefix_products(m, q);
  double V = 0.0;
  for (int i = 0; i < m.dof(); ++i) {
    const Eigen::Vector3d com = prefix[i + 1].act(m.link_coms[i]);
    V += m.link_masses[i] * (-m.gravity).dot(com);
  }
  return V;
}

Eigen::VectorXd gravity_gradient_joint(const RobotModel& m,
                                       const Eigen::VectorXd& q) {
  check_dim(m, q, "gravity_gradient_joint");
  const double h = 1e-6;
  Eigen::VectorXd grad(m.dof());
  Eigen::VectorXd qq = q;
  for (int i = 0; i < m.dof(); ++i) {
    qq[i] = q[i] + h;
    const double plus = gravity_potential(m, qq);
    qq[i] = q[i] - h;
    const double minus = gravity_potential(m, qq);
    qq[i] = q[i];
    grad[i] = (plus - minus) / (2.0 * h);
  }
  return grad;
}

Vector6d gravity_gradient_task(const RobotModel& m, const Eigen::VectorXd& q,
                               double damping) {
  const Eigen::MatrixXd J = body_jacobian(m, q);
  const double sigma = smallest_singular_value(J);
  if (sigma < kSingularTol) {
    throw SingularityError("gravity_gradient_task: rank-deficient body Jacobian",
                           sigma);
  }
  return pseudo_inverse(J, damping).transpose() * gravity_gradient_joint(m, q);
}

Eigen::VectorXd solve_ik(const RobotModel& m, const Pose& target,
                         const Eigen::VectorXd& q_seed, const IkOptions& opts) {
  check_dim(m, q_seed, "solve_ik");
  Eigen::VectorXd q = q_seed;
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opts.max_iter; ++it) {
    const Pose g = forward_kinematics(m, q);
    Vector6d err;
    try {
      err = log_pose_vec(g.inverse() * target);
    } catch (const StructureError&) {
      // pi-rotation branch: nudge off the cut and retry
      q.array() += 1e-3;
      continue;
    }
    residual = err.norm();
    if (residual < opts.tol) return q;
    Eigen::VectorXd step =
        pseudo_inverse(body_jacobian(m, q), opts.damping) * err;
    const double sn = step.norm();
    if (sn > opts.max_step) step *= opts.max_step / sn;
    q += step;
  }
  throw ConvergenceError("solve_ik: did not reach tolerance", residual);
}

Eigen::VectorXd solve_ik_multi_seed(const RobotModel& m, const Pose& target,
                                    const IkOptions& opts) {
  const int n = m.dof();
  std::vector<Eigen::VectorXd> seeds;
  seeds.push_back(Eigen::VectorXd::Constant(n, 0.3));
  seeds.push_back(Eigen::VectorXd::Constant(n, -0.3));
  for (int k = 0; k < 8; ++k) {
    Eigen::VectorXd s(n);
    for (int i = 0; i < n; ++i) {
      // deterministic low-discrepancy-ish spread over [-pi/2, pi/2]
      s[i] = 1.5 * std::sin(0.7 * (k + 1) * (i + 1) + 0.3 * k);
    }
    seeds.push_back(s);
  }
  double best_residual = std::numeric_limits<double>::infinity();
  for (const auto& seed : seeds) {
    try {
      return solve_ik(m, target, seed, opts);
    } catch (const ConvergenceError& e) {
      best_residual = std::min(best_residual, e.residual);
    }
  }
  throw ConvergenceError("solve_ik_multi_seed: pose unreachable", best_residual);
}

}  // namespace geovs
