// Copyright 2026 The flagsquash Authors
// SPDX-License-Identifier: Apache-2.0

// feasibility.hpp: Numerical search for a Choi matrix J >= 0 with Tr_2 J = I
// reproducing post-processed statistics,
//   P Tr[F_eta rho] = Tr[(rho^T (x) F_target) J]   for all rho,
// by Dykstra alternating projections between the affine constraint set and
// the PSD cone. Constraints Tr[A J] = 0 with A >= 0 pin J to the kernel of A;
// the search runs on that face, where a strictly feasible point usually exists
// and the projections converge linearly instead of sublinearly.

#pragma once

#include "flagsq/channels.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace flagsq {

enum class Verdict { feasible, infeasible, undetermined };

std::string_view to_string(Verdict v);

struct FeasibilityOptions {
  double tol = 1e-6;
  int max_iter = 10000;
  std::uint64_t seed = 0;
  int restarts = 3;
  /// Plateaued distance between the two sets above which a restart counts as separated.
  double gap_floor = 1e-3;
};

struct FeasibilityResult {
  Verdict verdict = Verdict::undetermined;
  /// Final distance between the affine iterate and its PSD partner (best restart).
  double residual = 0.0;
  /// Iterations summed over all restarts that ran.
  int iterations = 0;
  /// Present iff verdict == feasible. Satisfies the linear constraints exactly
  /// up to rounding and lies within `residual` of the PSD cone.
  std::optional<Matrix> witness;
  /// True when the linear constraints have no solution on the face J is
  /// confined to.
  bool affine_inconsistent = false;
  /// True when a constraint Tr[A J] = c with A >= 0 demands c < 0.
  bool negative_psd_constraint = false;
  /// Dimension of the face the search ran on (din * dout when nothing is pinned).
  Index face_dim = 0;
  /// Final residual of each restart that ran.
  std::vector<double> restart_residuals;
  /// Residual of the first restart every 100 iterations.
  std::vector<double> trajectory;
};

FeasibilityResult choi_feasibility(const RealMatrix& p_dc, const POVM& f_eta, const POVM& f_target,
                                   const FeasibilityOptions& options = {});
FeasibilityResult choi_feasibility(const StochasticMatrix& p_dc, const POVM& f_eta, const POVM& f_target,
                                   const FeasibilityOptions& options = {});

struct WitnessReport {
  double min_eigenvalue = 0.0;
  double hermitian_deviation = 0.0;
  double trace_deviation = 0.0;
  double linear_residual = 0.0;
  bool psd_ok = false;
  bool trace_ok = false;
  bool linear_ok = false;
  bool pass() const { return psd_ok && trace_ok && linear_ok; }
};

/// Re-checks a candidate Choi matrix directly: PSD (min eigenvalue >= -tol),
/// max |Tr_2 J - I| <= tol, and the statistics constraints on the Hermitian
/// basis within tol.
WitnessReport verify_choi_witness(const Matrix& j, const RealMatrix& p_dc, const POVM& f_eta, const POVM& f_target,
                                  double tol);

}  // namespace flagsq
