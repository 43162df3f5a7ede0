// Copyright 2026 The flagsquash Authors
// SPDX-License-Identifier: Apache-2.0

#include "flagsq/simplex.hpp"

#include <limits>
#include <stdexcept>
#include <vector>

namespace flagsq {

Phase1Result phase1_simplex(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double tol, int max_iterations) {
  using Eigen::Index;
  if (a.rows() != b.size()) throw std::invalid_argument("phase1_simplex: dimension mismatch");
  constexpr double kPivotEps = 1e-12;
  const Index m = a.rows();
  const Index n = a.cols();

  // Tableau columns: n structural, m artificial, 1 right-hand side.
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m + 1, n + m + 1);
  for (Index i = 0; i < m; ++i) {
    const double sign = b[i] < 0 ? -1.0 : 1.0;
    t.row(i).head(n) = sign * a.row(i);
    t(i, n + i) = 1.0;
    t(i, n + m) = sign * b[i];
  }
  // Reduced costs of the artificial objective.
  for (Index i = 0; i < m; ++i) {
    t.row(m).head(n) -= t.row(i).head(n);
    t(m, n + m) -= t(i, n + m);
  }
  std::vector<Index> basis(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;

  Phase1Result result;
  for (; result.iterations < max_iterations; ++result.iterations) {
    Index enter = -1;
    for (Index j = 0; j < n + m; ++j) {
      if (t(m, j) < -kPivotEps) {
        enter = j;
        break;
      }
    }
    if (enter < 0) break;

    Index leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < m; ++i) {
      if (t(i, enter) > kPivotEps) {
        const double ratio = t(i, n + m) / t(i, enter);
        if (ratio < best - kPivotEps ||
            (ratio <= best + kPivotEps && leave >= 0 &&
             basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
          best = ratio;
          leave = i;
        }
      }
    }
    if (leave < 0) break;  // unbounded direction; cannot occur for a bounded-below objective

    t.row(leave) /= t(leave, enter);
    for (Index i = 0; i <= m; ++i) {
      if (i != leave && t(i, enter) != 0.0) t.row(i) -= t(i, enter) * t.row(leave);
    }
    basis[static_cast<std::size_t>(leave)] = enter;
  }

  result.x = Eigen::VectorXd::Zero(n);
  for (Index i = 0; i < m; ++i) {
    const Index v = basis[static_cast<std::size_t>(i)];
    if (v < n) result.x[v] = std::max(0.0, t(i, n + m));
  }
  result.infeasibility = (a * result.x - b).cwiseAbs().sum();
  result.feasible = result.infeasibility <= tol;
  return result;
}

}  // namespace flagsq
