// Copyright 2026 The flagsquash Authors
// SPDX-License-Identifier: Apache-2.0

// simplex.hpp: Dense phase-1 simplex for small feasibility problems
//   find x >= 0 with A x = b.

#pragma once

#include <Eigen/Dense>

namespace flagsq {

struct Phase1Result {
  bool feasible = false;
  Eigen::VectorXd x;        ///< best point found (x >= 0)
  double infeasibility = 0; ///< optimal sum of artificial variables, sum_i |A x - b|_i
  int iterations = 0;
};

/// Minimizes the total artificial slack with Bland's rule. `tol` is the
/// largest accepted optimal infeasibility.
Phase1Result phase1_simplex(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double tol = 1e-9,
                            int max_iterations = 100000);

}  // namespace flagsq
