#include "geovs/depth_transport.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace geovs {

namespace {

constexpr double kTinyMass = 1e-300;
constexpr double kUnmappedRowMass = 1e-12;

/// Unnormalized KL divergence sum(a log(a/b) - a + b); a_i = 0 contributes b_i.
double kl_divergence(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double kl = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] > 0.0) {
      kl += a[i] * std::log(a[i] / b[i]) - a[i] + b[i];
    } else {
      kl += b[i];
    }
  }
  return kl;
}

Eigen::MatrixXd stabilized_kernel(const Eigen::VectorXd& f,
                                  const Eigen::VectorXd& g,
                                  const Eigen::MatrixXd& cost, double eps) {
  Eigen::MatrixXd K =
      ((f.replicate(1, cost.cols()) + g.transpose().replicate(cost.rows(), 1) -
        cost) /
       eps)
          .array()
          .exp();
  return K;
}

}  // namespace

void DepthCloud::validate(double max_range) const {
  if (points.size() != weights.size() || points.size() != pixels.size()) {
    throw StructureError("DepthCloud: parallel arrays differ in length");
  }
  double total = 0.0;
  for (size_t i = 0; i < points.size(); ++i) {
    if (weights[i] <= 0.0) {
      throw StructureError("DepthCloud: weights must be positive");
    }
    if (points[i].z() <= 0.0 || points[i].z() > max_range) {
      throw StructureError("DepthCloud: depth out of range");
    }
    total += weights[i];
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw StructureError("DepthCloud: weights must sum to one");
  }
}

void DepthCloud::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw StructureError("DepthCloud::write: cannot open " + path);
  char buf[64];
  out << cols << " " << rows;
  const Eigen::Matrix4d m = support_pose.matrix();
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      std::snprintf(buf, sizeof(buf), " %.17g", m(r, c));
      out << buf;
    }
  }
  out << "\n";
  for (size_t i = 0; i < points.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%d %d %.17g %.17g %.17g %.17g",
                  pixels[i].x(), pixels[i].y(), points[i].x(), points[i].y(),
                  points[i].z(), weights[i]);
    out << buf << "\n";
  }
}

DepthCloud DepthCloud::read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StructureError("DepthCloud::read: cannot open " + path);
  DepthCloud cloud;
  std::string line;
  if (!std::getline(in, line)) {
    throw StructureError("DepthCloud::read: missing header");
  }
  std::istringstream header(line);
  Eigen::Matrix4d m;
  header >> cloud.cols >> cloud.rows;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      if (!(header >> m(r, c))) {
        throw StructureError("DepthCloud::read: malformed pose header");
      }
    }
  }
  cloud.support_pose = Pose::from_matrix(m, 1e-6);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    Eigen::Vector2i px;
    Eigen::Vector3d pt;
    double w;
    if (!(row >> px.x() >> px.y() >> pt.x() >> pt.y() >> pt.z() >> w)) {
      throw StructureError("DepthCloud::read: malformed atom line");
    }
    cloud.pixels.push_back(px);
    cloud.points.push_back(pt);
    cloud.weights.push_back(w);
  }
  return cloud;
}

Eigen::MatrixXd ground_cost(const DepthCloud& a, const DepthCloud& b, double p) {
  if (p < 1.0) throw StructureError("ground_cost: exponent must be >= 1");
  if (a.size() == 0 || b.size() == 0) {
    throw StructureError("ground_cost: empty cloud");
  }
  Eigen::MatrixXd C(a.size(), b.size());
  std::vector<Eigen::Vector3d> wb(b.size());
  for (size_t j = 0; j < b.size(); ++j) wb[j] = b.world_point(j);
  for (size_t i = 0; i < a.size(); ++i) {
    const Eigen::Vector3d wa = a.world_point(i);
    for (size_t j = 0; j < b.size(); ++j) {
      const double d = (wa - wb[j]).norm();
      C(i, j) = p == 2.0 ? d * d : std::pow(d, p);
    }
  }
  return C;
}

TransportPlan sinkhorn_unbalanced(const DepthCloud& mu, const DepthCloud& nu,
                                  const Eigen::MatrixXd& cost, double eps,
                                  double tau, int max_iter, double tol,
                                  const TransportPlan* warm_start) {
  if (eps <= 0.0 || tau <= 0.0) {
    throw StructureError("sinkhorn_unbalanced: eps and tau must be positive");
  }
  if (!cost.allFinite()) {
    throw StructureError("sinkhorn_unbalanced: non-finite cost entries");
  }
  const int N = static_cast<int>(mu.size());
  const int M = static_cast<int>(nu.size());
  if (cost.rows() != N || cost.cols() != M) {
    throw DimensionError("sinkhorn_unbalanced: cost shape mismatch");
  }

  const double kappa = tau / (tau + eps);
  Eigen::VectorXd log_mu(N), log_nu(M);
  for (int i = 0; i < N; ++i) log_mu[i] = std::log(mu.weights[i]);
  for (int j = 0; j < M; ++j) log_nu[j] = std::log(nu.weights[j]);

  Eigen::VectorXd f = Eigen::VectorXd::Zero(N);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(M);
  if (warm_start && warm_start->potential_f.size() == N &&
      warm_start->potential_g.size() == M) {
    f = warm_start->potential_f;
    g = warm_start->potential_g;
  }

  // Log-stabilized scaling: relative scalings u, v stay O(1) and are
  // absorbed into the potentials whenever they drift, after which the
  // kernel is rebuilt around the updated potentials.
  Eigen::MatrixXd K = stabilized_kernel(f, g, cost, eps);
  Eigen::VectorXd log_u = Eigen::VectorXd::Zero(N);
  Eigen::VectorXd log_v = Eigen::VectorXd::Zero(M);

  double change = std::numeric_limits<double>::infinity();
  int it = 0;
  constexpr double kAbsorbThreshold = 30.0;
  for (; it < max_iter; ++it) {
    const Eigen::VectorXd v = log_v.array().exp();
    Eigen::VectorXd Kv = (K * v).cwiseMax(kTinyMass);
    const Eigen::VectorXd log_u_new =
        kappa * (log_mu - Kv.array().log().matrix()) + (kappa - 1.0) / eps * f;

    const Eigen::VectorXd u = log_u_new.array().exp();
    Eigen::VectorXd Ktu = (K.transpose() * u).cwiseMax(kTinyMass);
    const Eigen::VectorXd log_v_new =
        kappa * (log_nu - Ktu.array().log().matrix()) + (kappa - 1.0) / eps * g;

    const double df = (eps * (log_u_new - log_u)).lpNorm<Eigen::Infinity>();
    const double dg = (eps * (log_v_new - log_v)).lpNorm<Eigen::Infinity>();
    change = std::max(df, dg);
    log_u = log_u_new;
    log_v = log_v_new;

    if (change < tol) break;

    if (log_u.lpNorm<Eigen::Infinity>() > kAbsorbThreshold ||
        log_v.lpNorm<Eigen::Infinity>() > kAbsorbThreshold) {
      f += eps * log_u;
      g += eps * log_v;
      log_u.setZero();
      log_v.setZero();
      K = stabilized_kernel(f, g, cost, eps);
    }
  }
  if (change >= tol) {
    throw ConvergenceError("sinkhorn_unbalanced: not converged after " +
                               std::to_string(max_iter) + " iterations",
                           change);
  }

  f += eps * log_u;
  g += eps * log_v;

  TransportPlan plan;
  plan.plan = stabilized_kernel(f, g, cost, eps);
  plan.row_marginal = plan.plan.rowwise().sum();
  plan.col_marginal = plan.plan.colwise().sum().transpose();
  plan.tau = tau;
  plan.eps = eps;
  plan.iterations = it + 1;
  plan.residual = change;
  plan.potential_f = f;
  plan.potential_g = g;

  Eigen::VectorXd mu_w(N), nu_w(M);
  for (int i = 0; i < N; ++i) mu_w[i] = mu.weights[i];
  for (int j = 0; j < M; ++j) nu_w[j] = nu.weights[j];
  plan.cost = (cost.array() * plan.plan.array()).sum() +
              tau * kl_divergence(plan.row_marginal, mu_w) +
              tau * kl_divergence(plan.col_marginal, nu_w);
  return plan;
}

DisplacementField transport_map(const TransportPlan& plan,
                                const DepthCloud& source,
                                const DepthCloud& target) {
  const size_t N = source.size();
  const size_t M = target.size();
  if (plan.plan.rows() != static_cast<Eigen::Index>(N) ||
      plan.plan.cols() != static_cast<Eigen::Index>(M)) {
    throw DimensionError("transport_map: plan shape mismatch");
  }
  std::vector<Eigen::Vector3d> target_world(M);
  for (size_t j = 0; j < M; ++j) target_world[j] = target.world_point(j);

  DisplacementField field;
  field.source_world.resize(N);
  field.target_world.resize(N);
  field.displacement.resize(N);
  field.mapped.resize(N);
  field.weights = source.weights;
  for (size_t i = 0; i < N; ++i) {
    field.source_world[i] = source.world_point(i);
    const double row_mass = plan.row_marginal[static_cast<Eigen::Index>(i)];
    if (row_mass < kUnmappedRowMass) {
      field.mapped[i] = false;
      field.target_world[i] = field.source_world[i];
      field.displacement[i].setZero();
      continue;
    }
    Eigen::Vector3d bary = Eigen::Vector3d::Zero();
    for (size_t j = 0; j < M; ++j) {
      bary += plan.plan(static_cast<Eigen::Index>(i),
                        static_cast<Eigen::Index>(j)) *
              target_world[j];
    }
    bary /= row_mass;
    field.mapped[i] = true;
    field.target_world[i] = bary;
    field.displacement[i] = bary - field.source_world[i];
  }
  return field;
}

Eigen::MatrixXd controllability_gramian(const Eigen::MatrixXd& A,
                                        const Eigen::MatrixXd& B, double t0,
                                        double t1, int quadrature_steps) {
  if (t1 <= t0) {
    if (t1 == t0) return Eigen::MatrixXd::Zero(A.rows(), A.cols());
    throw StructureError("controllability_gramian: t1 must exceed t0");
  }
  if (quadrature_steps < 2) {
    throw StructureError("controllability_gramian: need >= 2 quadrature steps");
  }
  int steps = quadrature_steps + (quadrature_steps % 2);
  const double h = (t1 - t0) / steps;
  const Eigen::MatrixXd BBt = B * B.transpose();

  auto integrand = [&](double lambda) -> Eigen::MatrixXd {
    const Eigen::MatrixXd psi = (A * lambda).exp();
    const Eigen::MatrixXd psi_inv = (A * (-lambda)).exp();
    return psi * BBt * psi_inv;
  };

  Eigen::MatrixXd W = integrand(t0) + integrand(t1);
  for (int k = 1; k < steps; ++k) {
    W += (k % 2 == 1 ? 4.0 : 2.0) * integrand(t0 + k * h);
  }
  W *= h / 3.0;
  return (W + W.transpose()) / 2.0;
}

GramianPair make_gramian_pair(const Matrix18d& A, const Eigen::MatrixXd& B_full,
                              double t, int quadrature_steps) {
  GramianPair grams;
  grams.A = A;
  grams.B_full = B_full;
  grams.t = t;
  grams.Wc_full = controllability_gramian(A, B_full, 0.0, 1.0, quadrature_steps);
  grams.Wc_togo.setZero();
  grams.Wc_prior.setZero();
  if (t < 1.0) {
    grams.Wc_togo = controllability_gramian(A, B_full, t, 1.0, quadrature_steps);
  }
  if (t > 0.0) {
    grams.Wc_prior = controllability_gramian(A, B_full, 0.0, t, quadrature_steps);
  }
  return grams;
}

Vector18d state_displacement(const DisplacementField& field, const Pose& camera,
                             bool* degenerate) {
  double total = 0.0;
  Eigen::Vector3d mean_src = Eigen::Vector3d::Zero();
  Eigen::Vector3d mean_tgt = Eigen::Vector3d::Zero();
  for (size_t i = 0; i < field.displacement.size(); ++i) {
    if (!field.mapped[i]) continue;
    total += field.weights[i];
    mean_src += field.weights[i] * field.source_world[i];
    mean_tgt += field.weights[i] * field.target_world[i];
  }
  if (degenerate) *degenerate = false;
  if (total < 1e-12) {
    if (degenerate) *degenerate = true;
    return Vector18d::Zero();
  }
  mean_src /= total;
  mean_tgt /= total;
  const Eigen::Vector3d mean_disp = mean_tgt - mean_src;

  Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
  for (size_t i = 0; i < field.displacement.size(); ++i) {
    if (!field.mapped[i]) continue;
    H += (field.weights[i] / total) * (field.source_world[i] - mean_src) *
         (field.target_world[i] - mean_tgt).transpose();
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU |
                                               Eigen::ComputeFullV);
  Eigen::Matrix3d R_fit = Eigen::Matrix3d::Identity();
  if (svd.singularValues()(1) > 1e-12 * std::max(1.0, svd.singularValues()(0))) {
    Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
    D(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0
                  ? -1.0
                  : 1.0;
    R_fit = svd.matrixV() * D * svd.matrixU().transpose();
  } else if (degenerate) {
    *degenerate = true;
  }

  // Rotate about the source centroid, then translate by the mean
  // displacement; apply the same world-frame motion to the camera pose.
  Pose moved;
  moved.R = R_fit * camera.R;
  moved.p = R_fit * (camera.p - mean_src) + mean_src + mean_disp;

  Vector18d delta = Vector18d::Zero();
  delta.head<12>() = flatten_pose(moved) - flatten_pose(camera);
  return delta;
}

Eigen::VectorXd u_dc(const RobotModel& m, const PhaseState& s, double t,
                     const DisplacementField& field, const GramianPair& grams,
                     const UdcOptions& opts, double damping,
                     UdcDiagnostics* diag) {
  (void)damping;
  const int n = m.dof();
  bool degenerate = false;
  const Vector18d delta = state_displacement(field, s.g, &degenerate);

  // Pseudo-inverse of the full-horizon Gramian restricted to its range.
  Eigen::SelfAdjointEigenSolver<Matrix18d> es(grams.Wc_full);
  const Eigen::VectorXd evals = es.eigenvalues();
  const double cutoff = 1e-10 * std::max(evals.cwiseAbs().maxCoeff(), 1e-30);
  Eigen::VectorXd inv_evals = Eigen::VectorXd::Zero(18);
  int rank = 0;
  for (int i = 0; i < 18; ++i) {
    if (evals[i] > cutoff) {
      inv_evals[i] = 1.0 / evals[i];
      ++rank;
    }
  }
  const Matrix18d Wc_pinv =
      es.eigenvectors() * inv_evals.asDiagonal() * es.eigenvectors().transpose();

  const Matrix18d psi = (grams.A * t).exp();
  const Vector18d x = flatten_state(s);

  // T_t = Psi Wc(t,1) Wc^+ Psi x + Wc(0,t) Psi' Wc^+ T*, as an affine map
  // in x with T* = x + delta.
  const Matrix18d G_lin =
      psi * grams.Wc_togo * Wc_pinv * psi + grams.Wc_prior * psi.transpose() * Wc_pinv;
  const Vector18d h_aff = grams.Wc_prior * psi.transpose() * Wc_pinv * delta;
  const Vector18d y =
      G_lin.completeOrthogonalDecomposition().solve(x - h_aff);

  // T* o T_t^-1 - T_t^-1 evaluated at x: shift of the inverted point by delta.
  const Vector18d steering = (y + delta) - y;
  Eigen::VectorXd u =
      grams.B_full.transpose() * (psi.transpose() * (Wc_pinv * steering));

  bool clamped = false;
  for (int i = 0; i < n; ++i) {
    if (std::abs(u[i]) > opts.torque_limit) {
      u[i] = u[i] > 0.0 ? opts.torque_limit : -opts.torque_limit;
      clamped = true;
    }
  }
  if (diag) {
    diag->gramian_rank = rank;
    diag->clamped = clamped;
    diag->degenerate_fit = degenerate;
  }
  return u;
}

double wasserstein_distance(const DepthCloud& mu, const DepthCloud& nu,
                            double p, double eps, double tau, int max_iter,
                            double tol) {
  const Eigen::MatrixXd C = ground_cost(mu, nu, p);
  const TransportPlan plan =
      sinkhorn_unbalanced(mu, nu, C, eps, tau, max_iter, tol);
  return std::pow(std::max(plan.cost, 0.0), 1.0 / p);
}

}  // namespace geovs
