#pragma once

#include <Eigen/Dense>

namespace geovs {

struct ExactPlan {
  Eigen::MatrixXd plan;
  double cost = 0.0;
};

/// Exact optimum of the balanced discrete transportation LP
///   min <cost, plan>  s.t.  plan 1 = supply, plan' 1 = demand, plan >= 0,
/// by the transportation simplex (northwest-corner start, MODI pivoting,
/// epsilon-perturbed marginals against degeneracy). Reference solver for
/// validating the entropic path; independent of it.
ExactPlan solve_transport_lp(const Eigen::VectorXd& supply,
                             const Eigen::VectorXd& demand,
                             const Eigen::MatrixXd& cost);

}  // namespace geovs
