#include "geovs/exact_transport.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "geovs/errors.hpp"

namespace geovs {

namespace {

struct Cell {
  int r;
  int c;
};

}  // namespace

ExactPlan solve_transport_lp(const Eigen::VectorXd& supply,
                             const Eigen::VectorXd& demand,
                             const Eigen::MatrixXd& cost) {
  const int N = static_cast<int>(supply.size());
  const int M = static_cast<int>(demand.size());
  if (cost.rows() != N || cost.cols() != M) {
    throw DimensionError("solve_transport_lp: cost shape mismatch");
  }
  if (std::abs(supply.sum() - demand.sum()) >
      1e-9 * std::max(1.0, supply.sum())) {
    throw StructureError("solve_transport_lp: marginals must balance");
  }

  // Perturbed marginals keep every basic feasible solution nondegenerate.
  const double perturb = 1e-9 * supply.sum() / std::max(1, N * M);
  Eigen::VectorXd a = supply;
  Eigen::VectorXd b = demand;
  for (int i = 0; i < N; ++i) a[i] += perturb * (i + 1);
  b[M - 1] += perturb * N * (N + 1) / 2.0;

  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(N, M);
  std::vector<std::vector<bool>> basic(N, std::vector<bool>(M, false));
  std::vector<Cell> basis;
  basis.reserve(N + M - 1);

  // Northwest-corner initial basis.
  {
    Eigen::VectorXd ra = a;
    Eigen::VectorXd rb = b;
    int i = 0, j = 0;
    while (true) {
      const double move = std::min(ra[i], rb[j]);
      x(i, j) = move;
      basic[i][j] = true;
      basis.push_back({i, j});
      ra[i] -= move;
      rb[j] -= move;
      if (i == N - 1 && j == M - 1) break;
      if (ra[i] <= rb[j] && i < N - 1) {
        ++i;
      } else if (j < M - 1) {
        ++j;
      } else {
        ++i;
      }
    }
  }
  if (static_cast<int>(basis.size()) != N + M - 1) {
    throw ConvergenceError("solve_transport_lp: degenerate initial basis",
                           static_cast<double>(basis.size()));
  }

  const int max_pivots = 200 * (N + M) * (N + M);
  for (int pivot = 0; pivot < max_pivots; ++pivot) {
    // Duals from the basis tree: u_i + v_j = c_ij on basic cells.
    std::vector<double> u(N, 0.0), v(M, 0.0);
    std::vector<bool> u_set(N, false), v_set(M, false);
    u_set[0] = true;
    bool progress = true;
    while (progress) {
      progress = false;
      for (const Cell& cell : basis) {
        if (u_set[cell.r] && !v_set[cell.c]) {
          v[cell.c] = cost(cell.r, cell.c) - u[cell.r];
          v_set[cell.c] = true;
          progress = true;
        } else if (!u_set[cell.r] && v_set[cell.c]) {
          u[cell.r] = cost(cell.r, cell.c) - v[cell.c];
          u_set[cell.r] = true;
          progress = true;
        }
      }
    }

    // Most negative reduced cost enters the basis.
    int er = -1, ec = -1;
    double best = -1e-12;
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < M; ++j) {
        if (basic[i][j]) continue;
        const double rc = cost(i, j) - u[i] - v[j];
        if (rc < best) {
          best = rc;
          er = i;
          ec = j;
        }
      }
    }
    if (er < 0) break;  // optimal

    // The entering cell closes a unique alternating row/column cycle with
    // the basis tree. Depth-first search; closing edge returns to column ec
    // through a row move, which keeps the cycle length even.
    std::vector<std::vector<int>> row_cells(N), col_cells(M);
    for (int k = 0; k < static_cast<int>(basis.size()); ++k) {
      row_cells[basis[k].r].push_back(k);
      col_cells[basis[k].c].push_back(k);
    }
    std::vector<Cell> cycle{{er, ec}};
    std::vector<bool> used(basis.size(), false);
    std::function<bool(bool)> extend = [&](bool row_move) -> bool {
      const Cell cur = cycle.back();
      if (row_move) {
        for (int k : row_cells[cur.r]) {
          const Cell cand = basis[k];
          if (cand.c == cur.c) continue;
          if (cand.c == ec) {
            cycle.push_back(cand);
            return true;
          }
          if (used[k]) continue;
          used[k] = true;
          cycle.push_back(cand);
          if (extend(false)) return true;
          cycle.pop_back();
          used[k] = false;
        }
      } else {
        for (int k : col_cells[cur.c]) {
          const Cell cand = basis[k];
          if (cand.r == cur.r) continue;
          if (used[k]) continue;
          used[k] = true;
          cycle.push_back(cand);
          if (extend(true)) return true;
          cycle.pop_back();
          used[k] = false;
        }
      }
      return false;
    };
    if (!extend(true)) {
      throw ConvergenceError("solve_transport_lp: basis cycle not found", best);
    }

    // Signs alternate +,-,+,- from the entering cell; odd positions give up
    // mass and the tightest one leaves the basis.
    double theta = std::numeric_limits<double>::infinity();
    int leave = -1;
    for (size_t k = 1; k < cycle.size(); k += 2) {
      if (x(cycle[k].r, cycle[k].c) < theta) {
        theta = x(cycle[k].r, cycle[k].c);
        leave = static_cast<int>(k);
      }
    }
    for (size_t k = 0; k < cycle.size(); ++k) {
      x(cycle[k].r, cycle[k].c) += (k % 2 == 0 ? theta : -theta);
    }
    const Cell leaving = cycle[leave];
    basic[leaving.r][leaving.c] = false;
    basic[er][ec] = true;
    for (Cell& cell : basis) {
      if (cell.r == leaving.r && cell.c == leaving.c) {
        cell = {er, ec};
        break;
      }
    }
  }

  ExactPlan result;
  result.plan = x.cwiseMax(0.0);
  result.cost = (cost.array() * result.plan.array()).sum();
  return result;
}

}  // namespace geovs
