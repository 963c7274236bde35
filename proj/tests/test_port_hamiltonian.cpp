#include <doctest.h>

#include <random>

#include "geovs/port_hamiltonian.hpp"
#include "oracles.hpp"

using namespace geovs;

namespace {

RobotModel reference_robot() {
  return RobotModel::load(GEOVS_CONFIG_DIR "/robot_6dof.json");
}

Eigen::VectorXd random_config(std::mt19937_64& rng) {
  Eigen::VectorXd q = oracles::random_vector(rng, 6, 1.2);
  q[1] += 0.7;
  q[2] += 0.6;
  q[4] += 0.5;
  return q;
}

PhaseState random_state(const RobotModel& m, std::mt19937_64& rng,
                        double momentum_scale = 0.5) {
  PhaseState s;
  s.q = random_config(rng);
  s.g = forward_kinematics(m, s.q);
  s.pv = momentum_scale * Eigen::Vector3d(oracles::random_vector(rng, 3, 1.0));
  s.pw = momentum_scale * Eigen::Vector3d(oracles::random_vector(rng, 3, 1.0));
  return s;
}

/// Planar swing state: joints 2/3/5 share the y axis, so with zero momentum
/// on the out-of-plane directions the free dynamics stay away from the
/// wrist singularity for the whole test horizon.
PhaseState swing_state(const RobotModel& m) {
  PhaseState s;
  Eigen::VectorXd q(6);
  q << 0.4, 1.9, -1.1, 0.0, -0.7, 0.0;
  s.q = q;
  s.g = forward_kinematics(m, q);
  Eigen::VectorXd qdot(6);
  qdot << 0.0, 0.35, -0.25, 0.0, 0.3, 0.0;
  const Vector6d p = momentum_from_joint(m, q, qdot);
  s.pv = p.head<3>();
  s.pw = p.tail<3>();
  return s;
}

}  // namespace

TEST_CASE("interconnection structure") {
  const RobotModel m = reference_robot();
  std::mt19937_64 rng(31);

  SUBCASE("zero momentum zeroes the px block") {
    PhaseState s = random_state(m, rng, 0.0);
    const Interconnection ic = interconnection(s);
    CHECK(ic.px.isZero(0.0));
  }

  SUBCASE("identity pose gives identity and basis skews") {
    PhaseState s;
    s.q = Eigen::VectorXd::Zero(6);
    s.g = Pose::Identity();
    const Interconnection ic = interconnection(s);
    CHECK(ic.gx.block<3, 3>(0, 0).isIdentity(0.0));
    for (int i = 0; i < 3; ++i) {
      CHECK((ic.gx.block<3, 3>(3 + 3 * i, 3) -
             oracles::skew3(Eigen::Vector3d::Unit(i)))
                .norm() == 0.0);
    }
  }

  SUBCASE("assembled matrix is skew-symmetric") {
    for (int i = 0; i < 100; ++i) {
      const PhaseState s = random_state(m, rng, 2.0);
      const Matrix18d J = interconnection(s).assembled();
      CHECK((J + J.transpose()).norm() < 1e-12);
    }
  }
}

TEST_CASE("hamiltonian value") {
  const RobotModel m = reference_robot();
  std::mt19937_64 rng(32);

  SUBCASE("zero momentum leaves the potential") {
    PhaseState s = random_state(m, rng, 0.0);
    CHECK(hamiltonian(m, s) ==
          doctest::Approx(gravity_potential(m, s.q)).epsilon(1e-12));
  }

  SUBCASE("kinetic term equals the quadratic form in the twist") {
    RobotModel m0 = m;
    m0.gravity.setZero();
    for (int i = 0; i < 20; ++i) {
      PhaseState s = random_state(m0, rng, 0.0);
      const Eigen::VectorXd qdot = oracles::random_vector(rng, 6, 1.0);
      const Vector6d xi = body_jacobian(m0, s.q) * qdot;
      const Vector6d p = mass_matrix_task(m0, s.q) * xi;
      s.pv = p.head<3>();
      s.pw = p.tail<3>();
      const double ref = 0.5 * xi.dot(mass_matrix_task(m0, s.q) * xi);
      CHECK(hamiltonian(m0, s) == doctest::Approx(ref).epsilon(1e-9));
    }
  }

  SUBCASE("matches the joint-space energy oracle") {
    for (int i = 0; i < 20; ++i) {
      PhaseState s = random_state(m, rng, 0.0);
      const Eigen::VectorXd qdot = oracles::random_vector(rng, 6, 1.0);
      const Vector6d p = momentum_from_joint(m, s.q, qdot);
      s.pv = p.head<3>();
      s.pw = p.tail<3>();
      const double ref = 0.5 * qdot.dot(mass_matrix_joint(m, s.q) * qdot) +
                         gravity_potential(m, s.q);
      CHECK(hamiltonian(m, s) == doctest::Approx(ref).epsilon(1e-8));
    }
  }
}

TEST_CASE("momentum_from_joint") {
  const RobotModel m = reference_robot();
  std::mt19937_64 rng(33);

  SUBCASE("zero velocity gives zero momentum") {
    const Eigen::VectorXd q = random_config(rng);
    CHECK(momentum_from_joint(m, q, Eigen::VectorXd::Zero(6)).norm() == 0.0);
  }

  SUBCASE("inverse roundtrip through the task inertia") {
    for (int i = 0; i < 20; ++i) {
      const Eigen::VectorXd q = random_config(rng);
      const Eigen::VectorXd qdot = oracles::random_vector(rng, 6, 1.0);
      const Vector6d xi = body_jacobian(m, q) * qdot;
      const Vector6d p = momentum_from_joint(m, q, qdot);
      CHECK((task_inertia_inverse(m, q) * p - xi).norm() < 1e-9);
    }
  }

  SUBCASE("bilinear pairing <p, xi> = qdot' M qdot") {
    for (int i = 0; i < 20; ++i) {
      const Eigen::VectorXd q = random_config(rng);
      const Eigen::VectorXd qdot = oracles::random_vector(rng, 6, 1.0);
      const Vector6d xi = body_jacobian(m, q) * qdot;
      const Vector6d p = momentum_from_joint(m, q, qdot);
      const double rhs = qdot.dot(mass_matrix_joint(m, q) * qdot);
      CHECK(p.dot(xi) == doctest::Approx(rhs).epsilon(1e-9));
    }
  }
}

TEST_CASE("state derivative") {
  const RobotModel m = reference_robot();
  std::mt19937_64 rng(34);

  SUBCASE("equilibrium: no input, no momentum, no gravity") {
    RobotModel m0 = m;
    m0.gravity.setZero();
    const PhaseState s = random_state(m0, rng, 0.0);
    const StateDerivative d =
        state_derivative(m0, s, Eigen::VectorXd::Zero(6));
    CHECK(d.x_dot.norm() < 1e-12);
  }

  SUBCASE("skew form: <grad H, xdot> = 0 with u = 0") {
    for (int i = 0; i < 50; ++i) {
      const PhaseState s = random_state(m, rng, 1.0);
      const StateDerivative d = state_derivative(m, s, Eigen::VectorXd::Zero(6));
      const Vector18d grad = hamiltonian_gradient(m, s);
      const double scale = std::max(1.0, grad.norm() * d.x_dot.norm());
      CHECK(std::abs(grad.dot(d.x_dot)) / scale < 1e-10);
    }
  }

  SUBCASE("matches the dense 18x18 assembly") {
    for (int i = 0; i < 100; ++i) {
      const PhaseState s = random_state(m, rng, 1.0);
      const Eigen::VectorXd u = oracles::random_vector(rng, 6, 3.0);
      const StateDerivative d = state_derivative(m, s, u);

      const Vector18d grad = hamiltonian_gradient(m, s);
      const Matrix18d J = interconnection(s).assembled();
      Eigen::MatrixXd B_full = Eigen::MatrixXd::Zero(18, 6);
      B_full.block<6, 6>(12, 0) =
          pseudo_inverse(body_jacobian(m, s.q), 0.0).transpose();
      const Vector18d dense = J * grad + B_full * u;
      CHECK((d.x_dot - dense).norm() < 1e-10);
    }
  }

  SUBCASE("input dimension mismatch") {
    const PhaseState s = random_state(m, rng);
    CHECK_THROWS_AS(state_derivative(m, s, Eigen::VectorXd::Zero(3)),
                    DimensionError);
  }
}

TEST_CASE("integrator") {
  const RobotModel m = reference_robot();

  SUBCASE("rest state with no gravity stays put") {
    RobotModel m0 = m;
    m0.gravity.setZero();
    std::mt19937_64 rng(35);
    const PhaseState s = random_state(m0, rng, 0.0);
    const PhaseState next =
        integrate_step(m0, s, Eigen::VectorXd::Zero(6), 1e-3);
    CHECK((next.g.matrix() - s.g.matrix()).norm() < 1e-14);
    CHECK(next.pv.norm() < 1e-14);
    CHECK(next.pw.norm() < 1e-14);
  }

  SUBCASE("dt must be positive") {
    std::mt19937_64 rng(36);
    const PhaseState s = random_state(m, rng, 0.0);
    CHECK_THROWS_AS(integrate_step(m, s, Eigen::VectorXd::Zero(6), 0.0),
                    StructureError);
  }

  SUBCASE("free swing conserves energy and stays on the group") {
    RobotModel m0 = m;
    PhaseState s = swing_state(m0);
    const double H0 = hamiltonian(m0, s);
    double max_drift = 0.0;
    const double dt = 1e-3;
    for (int step = 0; step < 2000; ++step) {
      s = integrate_step(m0, s, Eigen::VectorXd::Zero(6), dt);
      max_drift = std::max(max_drift, std::abs(hamiltonian(m0, s) - H0));
      CHECK(s.g.satisfies_invariants(1e-9));
    }
    CHECK(max_drift / std::max(1.0, std::abs(H0)) < 1e-5);
    // q stays consistent with g through the drift correction
    CHECK((forward_kinematics(m0, s.q).matrix() - s.g.matrix()).norm() < 1e-6);
  }

  SUBCASE("order-2 convergence under dt halving") {
    const RobotModel m0 = reference_robot();
    auto drift = [&](double dt, int steps) {
      PhaseState s = swing_state(m0);
      const double H0 = hamiltonian(m0, s);
      double worst = 0.0;
      for (int i = 0; i < steps; ++i) {
        s = integrate_step(m0, s, Eigen::VectorXd::Zero(6), dt);
        worst = std::max(worst, std::abs(hamiltonian(m0, s) - H0));
      }
      return worst;
    };
    const double coarse = drift(2e-3, 500);
    const double fine = drift(1e-3, 1000);
    CHECK(coarse / fine > 3.2);  // ~4x for a second-order scheme
    CHECK(coarse / fine < 5.0);
  }

  SUBCASE("power balance dH/dt = <xi, B u> under constant input") {
    RobotModel m0 = reference_robot();
    PhaseState s = swing_state(m0);
    std::mt19937_64 rng(37);
    const Eigen::VectorXd u = oracles::random_vector(rng, 6, 2.0);
    const double dt = 1e-4;
    for (int i = 0; i < 50; ++i) {
      const double H_before = hamiltonian(m0, s);
      const TaskDynamics td = eval_task_dynamics(m0, s.q);
      const Vector6d xi = td.lambda_inv * s.momentum();
      const PhaseState next = integrate_step(m0, s, u, dt);
      const double H_after = hamiltonian(m0, next);
      const double measured = (H_after - H_before) / dt;
      const double predicted = xi.dot(td.B * u);
      CHECK(measured ==
            doctest::Approx(predicted).epsilon(5e-3).scale(std::max(
                1.0, std::abs(predicted))));
      s = next;
    }
  }
}

TEST_CASE("free rotation about a principal axis conserves momentum norm") {
  // Spin the wrist about its own (principal, axisymmetric) axis with gravity
  // off: a steady motion whose body angular momentum norm must not drift.
  const RobotModel m = reference_robot();
  PhaseState s;
  Eigen::VectorXd q(6);
  q << 0.3, 1.2, -0.9, 0.4, 0.8, 0.0;
  s.q = q;
  s.g = forward_kinematics(m, q);
  Eigen::VectorXd qdot = Eigen::VectorXd::Zero(6);
  qdot[5] = 1.0;
  RobotModel m0 = m;
  m0.gravity.setZero();
  const Vector6d p = momentum_from_joint(m0, q, qdot);
  s.pv = p.head<3>();
  s.pw = p.tail<3>();

  const double pw0 = s.pw.norm();
  Eigen::VectorXd u = Eigen::VectorXd::Zero(6);
  for (int i = 0; i < 1000; ++i) {
    s = integrate_step(m0, s, u, 1e-3);
  }
  CHECK(std::abs(s.pw.norm() - pw0) < 1e-9 * std::max(1.0, pw0));
}
