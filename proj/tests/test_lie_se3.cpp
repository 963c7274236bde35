#include <doctest.h>

#include <random>

#include "geovs/lie_se3.hpp"
#include "oracles.hpp"

using namespace geovs;

TEST_CASE("hat/vee basics") {
  CHECK(hat(Twist{}).isZero(0.0));

  Twist t;
  t.w = Eigen::Vector3d(0, 0, 1);
  const Eigen::Matrix4d m = hat(t);
  CHECK(m(0, 1) == -1.0);
  CHECK(m(1, 0) == 1.0);
  CHECK(m.block<3, 1>(0, 3).isZero(0.0));
  CHECK(m(0, 0) == 0.0);
  CHECK(m(2, 2) == 0.0);

  SUBCASE("roundtrip is exact over random twists") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 1000; ++i) {
      const Twist x = oracles::random_twist(rng, 5.0);
      const Twist back = vee(hat(x));
      CHECK(back.v == x.v);
      CHECK(back.w == x.w);
    }
  }

  SUBCASE("vee rejects malformed matrices") {
    Eigen::Matrix4d bad = Eigen::Matrix4d::Zero();
    bad(0, 1) = 1.0;  // not skew: missing -1 at (1,0)
    CHECK_THROWS_AS(vee(bad), StructureError);
    Eigen::Matrix4d bad_row = hat(Twist{});
    bad_row(3, 0) = 1e-3;
    CHECK_THROWS_AS(vee(bad_row), StructureError);
  }
}

TEST_CASE("exp_twist closed form") {
  SUBCASE("zero twist gives identity") {
    const Pose g = exp_twist(Twist{}, 3.7);
    CHECK(g.R.isIdentity(0.0));
    CHECK(g.p.isZero(0.0));
  }

  SUBCASE("pure translation") {
    Twist t;
    t.v = Eigen::Vector3d(1, 0, 0);
    const Pose g = exp_twist(t, 2.0);
    CHECK(g.R.isIdentity(1e-15));
    CHECK((g.p - Eigen::Vector3d(2, 0, 0)).norm() == 0.0);
  }

  SUBCASE("quarter turn about z matches the series oracle") {
    Twist t;
    t.w = Eigen::Vector3d(0, 0, 1);
    const double q = M_PI / 2.0;
    const Pose g = exp_twist(t, q);
    const Eigen::Matrix4d ref = oracles::expm_series(hat(t) * q, 30);
    CHECK((g.matrix() - ref).norm() < 1e-12);
    CHECK(g.p.isZero(1e-15));
  }

  SUBCASE("series oracle over random screws, non-unit omega") {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 200; ++i) {
      const Twist t = oracles::random_twist(rng, 1.2);
      std::uniform_real_distribution<double> qd(-1.5, 1.5);
      const double q = qd(rng);
      const Pose g = exp_twist(t, q);
      const Eigen::Matrix4d ref = oracles::expm_series(hat(t) * q, 30);
      CHECK((g.matrix() - ref).norm() < 1e-10);
      CHECK(g.satisfies_invariants(1e-9));
    }
  }
}

TEST_CASE("log_pose inverts exp_twist") {
  SUBCASE("identity") {
    const auto [t, q] = log_pose(Pose::Identity());
    CHECK(t.vec().isZero(0.0));
    CHECK(q == 0.0);
  }

  SUBCASE("pure translation") {
    const Pose g = Pose::Translation({1, 2, 3});
    const auto [t, q] = log_pose(g);
    CHECK(t.w.isZero(1e-12));
    CHECK((t.v * q - Eigen::Vector3d(1, 2, 3)).norm() < 1e-12);
  }

  SUBCASE("roundtrip over random poses") {
    std::mt19937_64 rng(13);
    for (int i = 0; i < 500; ++i) {
      const Twist t = oracles::random_twist(rng);
      std::uniform_real_distribution<double> qd(0.05, M_PI - 0.1);
      const double q = t.w.norm() > 1e-9 ? qd(rng) / t.w.norm() : qd(rng);
      const Pose g = exp_twist(t, q);
      const auto [tl, ql] = log_pose(g);
      const Pose back = exp_twist(tl, ql);
      CHECK((back.matrix() - g.matrix()).norm() < 1e-9);
    }
  }

  SUBCASE("pi rotation raises the branch error") {
    Twist t;
    t.w = Eigen::Vector3d(0, 0, 1);
    const Pose g = exp_twist(t, M_PI);
    CHECK_THROWS_AS(log_pose(g), StructureError);
  }
}

TEST_CASE("adjoint and ad_small") {
  CHECK(adjoint(Pose::Identity()).isIdentity(0.0));

  std::mt19937_64 rng(14);

  SUBCASE("ad_small(x) x = 0") {
    for (int i = 0; i < 100; ++i) {
      const Twist x = oracles::random_twist(rng, 2.0);
      CHECK((ad_small(x) * x.vec()).norm() < 1e-12);
    }
  }

  SUBCASE("adjoint matches conjugation") {
    for (int i = 0; i < 200; ++i) {
      const Pose g = oracles::random_pose(rng, 2.0);
      const Twist x = oracles::random_twist(rng, 2.0);
      const Vector6d lhs = adjoint(g) * x.vec();
      const Eigen::Matrix4d conj = g.matrix() * hat(x) * g.inverse().matrix();
      const Twist rhs = vee(conj, 1e-8);
      CHECK((lhs - rhs.vec()).norm() < 1e-10);
    }
  }

  SUBCASE("adjoint is a homomorphism") {
    for (int i = 0; i < 1000; ++i) {
      const Pose g = oracles::random_pose(rng, 2.0);
      const Pose h = oracles::random_pose(rng, 2.0);
      CHECK((adjoint(g * h) - adjoint(g) * adjoint(h)).norm() < 1e-9);
    }
  }

  SUBCASE("ad_small is the Lie bracket") {
    for (int i = 0; i < 200; ++i) {
      const Twist x = oracles::random_twist(rng, 2.0);
      const Twist y = oracles::random_twist(rng, 2.0);
      const Eigen::Matrix4d bracket = hat(x) * hat(y) - hat(y) * hat(x);
      CHECK((ad_small(x) * y.vec() - vee(bracket, 1e-8).vec()).norm() < 1e-12);
    }
  }
}

TEST_CASE("left_translate") {
  std::mt19937_64 rng(15);
  const Twist x = oracles::random_twist(rng);
  CHECK((left_translate(Pose::Identity(), x) - hat(x)).norm() == 0.0);
  CHECK(left_translate(oracles::random_pose(rng), Twist{}).isZero(0.0));
  for (int i = 0; i < 50; ++i) {
    const Pose g = oracles::random_pose(rng, 2.0);
    const Twist t = oracles::random_twist(rng, 2.0);
    CHECK((left_translate(g, t) - g.matrix() * hat(t)).norm() == 0.0);
  }
}

TEST_CASE("geodesic distance") {
  const MetricWeights w = MetricWeights::Identity();
  std::mt19937_64 rng(16);

  SUBCASE("coincident poses give zero") {
    const Pose g = oracles::random_pose(rng);
    CHECK(geodesic_distance(g, g, w) == 0.0);
  }

  SUBCASE("unit translation with identity weights") {
    const Pose g1 = Pose::Translation({1, 0, 0});
    CHECK(geodesic_distance(Pose::Identity(), g1, w) == doctest::Approx(1.0));
  }

  SUBCASE("positive for distinct poses") {
    for (int i = 0; i < 300; ++i) {
      const Pose g0 = oracles::random_pose(rng, 2.0);
      const Pose g1 = oracles::random_pose(rng, 2.0);
      if ((g0.matrix() - g1.matrix()).norm() < 1e-6) continue;
      CHECK(geodesic_distance(g0, g1, w) > 0.0);
    }
  }

  SUBCASE("rotation term is left-invariant") {
    for (int i = 0; i < 200; ++i) {
      const Pose g0 = oracles::random_pose(rng, 2.0);
      const Pose g1 = oracles::random_pose(rng, 2.0);
      const Pose Q = oracles::random_pose(rng, 2.0);
      const double a = rotation_distance(g0.R, g1.R, w.GR);
      const double b = rotation_distance(Q.R * g0.R, Q.R * g1.R, w.GR);
      CHECK(a == doctest::Approx(b).epsilon(1e-9));
    }
  }

  SUBCASE("hand-evaluated formula on a known pair") {
    // delta_R = sqrt(3) * arccos((tr(R0'R1)-1)/2), delta_p = |p0-p1|
    Pose g0;
    Pose g1;
    g1.R = Eigen::AngleAxisd(0.8, Eigen::Vector3d::UnitY()).toRotationMatrix();
    g1.p = Eigen::Vector3d(0.3, -0.2, 0.1);
    const double dR = std::sqrt(3.0) * 0.8;
    const double dp = g1.p.norm();
    CHECK(geodesic_distance(g0, g1, w) ==
          doctest::Approx(std::sqrt(dR + dp)).epsilon(1e-12));
  }

  SUBCASE("invalid weights are rejected") {
    MetricWeights bad;
    bad.Gp(0, 0) = -1.0;
    CHECK_THROWS_AS(geodesic_distance(Pose::Identity(), Pose::Identity(), bad),
                    StructureError);
  }

  SUBCASE("near-identity rotations do not produce NaN") {
    Pose g0;
    Pose g1;
    g1.R = Eigen::AngleAxisd(1e-9, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    const double d = geodesic_distance(g0, g1, w);
    CHECK(std::isfinite(d));
  }
}

TEST_CASE("project_to_so3") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> d(-0.02, 0.02);
  for (int i = 0; i < 50; ++i) {
    const Pose g = oracles::random_pose(rng, 2.0);
    Eigen::Matrix3d noisy = g.R;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) noisy(r, c) += d(rng);
    const Eigen::Matrix3d R = project_to_so3(noisy);
    CHECK((R.transpose() * R - Eigen::Matrix3d::Identity()).norm() < 1e-12);
    CHECK(R.determinant() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((R - noisy).norm() < 0.1);
  }
}

TEST_CASE("pose invariants and homogeneous form") {
  std::mt19937_64 rng(18);
  for (int i = 0; i < 100; ++i) {
    const Pose g = exp_twist(oracles::random_twist(rng, 2.0), 1.0);
    CHECK(g.satisfies_invariants(1e-9));
    const Eigen::Matrix4d m = g.matrix();
    CHECK(m(3, 0) == 0.0);
    CHECK(m(3, 1) == 0.0);
    CHECK(m(3, 2) == 0.0);
    CHECK(m(3, 3) == 1.0);
  }
  Eigen::Matrix4d bad = Eigen::Matrix4d::Identity();
  bad(3, 0) = 1e-3;
  CHECK_THROWS_AS(Pose::from_matrix(bad), StructureError);
}
