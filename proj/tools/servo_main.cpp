#include <cstdio>
#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "geovs/exact_transport.hpp"
#include "geovs/servo_sim.hpp"

namespace {

void print_pose(const char* name, const geovs::Pose& g) {
  const Eigen::Matrix4d m = g.matrix();
  std::printf("%s:", name);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) std::printf(" %.16g", m(r, c));
  }
  std::printf("\n");
}

geovs::Pose pose_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw geovs::StructureError("cannot open pose matrix file " + path);
  Eigen::Matrix4d m;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      if (!(in >> m(r, c))) {
        throw geovs::StructureError("pose matrix file must hold 16 floats");
      }
    }
  }
  return geovs::Pose::from_matrix(m, 1e-6);
}

/// Random balanced cloud pair with well-separated atoms, compared against
/// the exact LP optimum.
int run_ot_suite(int instances, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> size_dist(2, 16);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  std::uniform_real_distribution<double> mass(0.5, 1.5);

  int failures = 0;
  for (int inst = 0; inst < instances; ++inst) {
    const int N = size_dist(rng);
    const int M = size_dist(rng);
    geovs::DepthCloud mu, nu;
    mu.cols = nu.cols = N;
    mu.rows = nu.rows = M;
    auto fill = [&](geovs::DepthCloud& cloud, int count) {
      double total = 0.0;
      for (int i = 0; i < count; ++i) {
        cloud.pixels.emplace_back(i, 0);
        cloud.points.emplace_back(coord(rng), coord(rng), 1.0 + 0.5 * coord(rng));
        cloud.weights.push_back(mass(rng));
        total += cloud.weights.back();
      }
      for (double& w : cloud.weights) w /= total;
    };
    fill(mu, N);
    fill(nu, M);

    const Eigen::MatrixXd C = geovs::ground_cost(mu, nu, 2.0);
    const geovs::TransportPlan plan =
        geovs::sinkhorn_unbalanced(mu, nu, C, 1e-3, 1e4, 200000, 1e-10);

    Eigen::VectorXd a(N), b(M);
    for (int i = 0; i < N; ++i) a[i] = mu.weights[i];
    for (int j = 0; j < M; ++j) b[j] = nu.weights[j];
    const geovs::ExactPlan exact = geovs::solve_transport_lp(a, b, C);

    const double rel =
        std::abs(plan.cost - exact.cost) / std::max(exact.cost, 1e-12);
    const bool ok = rel <= 0.01;
    if (!ok) ++failures;
    std::printf("[%s] instance %2d  %2dx%-2d  sinkhorn %.8f  lp %.8f  rel %.3e\n",
                ok ? "ok" : "FAIL", inst, N, M, plan.cost, exact.cost, rel);
  }
  std::printf("%d/%d instances within 1%% of the LP optimum\n",
              instances - failures, instances);
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geometric visual servoing simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a closed-loop servo experiment");
  std::string config_path;
  int pose = -1;
  std::string pose_matrix;
  std::string out_dir;
  bool no_udc = false;
  uint64_t seed = 0;
  bool seed_set = false;
  run->add_option("--config", config_path, "Run configuration JSON")->required();
  run->add_option("--pose", pose, "Experiment start pose index 1..4");
  run->add_option("--pose-matrix", pose_matrix,
                  "File with 16 floats (row-major homogeneous start pose)");
  run->add_flag("--no-udc", no_udc, "Disable the transport steering input");
  run->add_option("--out", out_dir, "Output directory for CSV and clouds");
  run->add_option("--seed", seed, "Seed for stochastic extensions")
      ->each([&seed_set](const std::string&) { seed_set = true; });

  auto* poses = app.add_subcommand("poses", "Print the experiment pose suite");

  auto* ot = app.add_subcommand("ot-test", "Sinkhorn vs exact-LP test suite");
  int instances = 50;
  uint64_t ot_seed = 7;
  ot->add_option("--instances", instances, "Number of random instances");
  ot->add_option("--seed", ot_seed, "RNG seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (poses->parsed()) {
      const geovs::AppendixPoses suite = geovs::load_appendix_poses();
      for (int i = 0; i < 4; ++i) {
        const std::string name = "g" + std::to_string(i + 1);
        print_pose(name.c_str(), suite.initial[i]);
        std::printf("  orthonormalization correction: %.3e\n",
                    suite.initial_correction[i]);
      }
      print_pose("g_star", suite.target);
      std::printf("  orthonormalization correction: %.3e\n",
                  suite.target_correction);
      return 0;
    }
    if (ot->parsed()) {
      return run_ot_suite(instances, ot_seed);
    }

    geovs::RunConfig cfg = geovs::RunConfig::load(config_path);
    if (pose >= 0) {
      cfg.pose_index = pose;
      cfg.initial_pose.reset();
    }
    if (!pose_matrix.empty()) {
      cfg.initial_pose = pose_from_file(pose_matrix);
      cfg.pose_index = 0;
    }
    if (no_udc) cfg.udc_enabled = false;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed_set) cfg.seed = seed;
    cfg.validate();

    const geovs::TrajectoryLog log = geovs::run_servo(cfg);
    geovs::write_log(log, cfg.out_dir);
    std::printf("%s after %d steps (%.3f s simulated); final geodesic %.6g\n",
                log.converged ? "converged" : "stopped", log.integrator_steps,
                log.integrator_steps * cfg.dt, log.rows.back().geodesic);
    std::printf("log written to %s\n", cfg.out_dir.c_str());
    return log.converged ? 0 : 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
