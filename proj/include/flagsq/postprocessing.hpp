// Copyright 2026 The flagsquash Authors
// SPDX-License-Identifier: Apache-2.0

// postprocessing.hpp: Classical post-processing of click outcomes.
//
// Convention: matrices are column-stochastic. Entry (i, j) is the probability
// of reporting outcome i given that outcome j occurred, so a POVM transforms as
// F'_i = sum_j P(i, j) F_j.

#pragma once

#include "flagsq/detectors.hpp"

#include <optional>
#include <string>
#include <vector>

namespace flagsq {

inline constexpr double kStochasticTol = 1e-10;
inline constexpr double kSwapTol = 1e-9;

class StochasticMatrix {
 public:
  /// Clamps entries in [-1e-12, 0) to zero; throws if an entry is more negative
  /// or a column does not sum to 1 within 1e-10. Empty label lists are filled
  /// with indices.
  explicit StochasticMatrix(RealMatrix entries, std::vector<std::string> row_labels = {},
                            std::vector<std::string> col_labels = {});

  static StochasticMatrix identity(const std::vector<std::string>& labels);

  const RealMatrix& matrix() const { return p_; }
  double operator()(Index row, Index col) const { return p_(row, col); }
  Index rows() const { return p_.rows(); }
  Index cols() const { return p_.cols(); }
  const std::vector<std::string>& row_labels() const { return row_labels_; }
  const std::vector<std::string>& col_labels() const { return col_labels_; }

 private:
  RealMatrix p_;
  std::vector<std::string> row_labels_;
  std::vector<std::string> col_labels_;
};

/// Composition (apply `b` first, then `a`).
StochasticMatrix operator*(const StochasticMatrix& a, const StochasticMatrix& b);

/// A 0/1 stochastic matrix merging the events of `source` into those of `target`.
class CoarseGraining : public StochasticMatrix {
 public:
  CoarseGraining(RealMatrix entries, EventTable source, EventTable target);

  const EventTable& source() const { return source_; }
  const EventTable& target() const { return target_; }
  /// Target index of each source event.
  std::vector<std::size_t> assignment() const;

 private:
  EventTable source_;
  EventTable target_;
};

/// Independent dark counts on k detectors over all 2^k patterns (enumerate_events order).
StochasticMatrix dark_count_matrix(const RealVector& d);

/// Probability that no detector fires a dark count, prod_i (1 - d_i).
double no_dark_count_probability(const RealVector& d);

/// Loss acting on the no-click and single-click outcomes of an input of at
/// most one photon; (k+1) x (k+1).
StochasticMatrix single_photon_loss_matrix(const RealVector& eta);

/// Post-processing used by the qubit squasher of active BB84: a double click
/// is reported as a uniformly random single click. 3 x 4.
StochasticMatrix qubit_squasher_postprocessing();

struct PostprocessingViolation {
  int condition = 0;  ///< 1: single->other single, 2: click->no-click, 3: P[s|s] < P[0|0]
  Index row = 0;
  Index col = 0;
  double value = 0.0;
};

struct DarkCountConditionReport {
  bool no_single_swap = true;
  bool no_click_erasure = true;
  bool single_retention = true;
  std::vector<PostprocessingViolation> violations;
  bool pass() const { return no_single_swap && no_click_erasure && single_retention; }
};

/// Checks the three structural conditions a dark-count post-processing must
/// satisfy for the dark-count noise channel to exist.
DarkCountConditionReport validate_dark_count_pp(const StochasticMatrix& p, const EventTable& events,
                                                double tol = 1e-12);

/// Identity on no-click and singles, all multi-click patterns merged.
CoarseGraining multiclick_coarse_graining(const EventTable& events);

/// POVM with elements F'_i = sum_j P(i, j) F_j, labelled by `target`.
POVM apply_postprocessing(const StochasticMatrix& p, const POVM& povm, const EventTable& target);
POVM apply_postprocessing(const CoarseGraining& cg, const POVM& povm);

struct SwapLpResult {
  bool feasible = false;
  std::optional<StochasticMatrix> p_dc;
  /// max |P_sq' P_dB - P_dc P_sq| and column-sum deviation of the returned (or
  /// best attempted) P_dc.
  double residual = 0.0;
  /// Optimal L1 infeasibility reported by the phase-1 solve.
  double infeasibility = 0.0;
  int iterations = 0;
};

/// Finds a stochastic P_dc with P_sq' P_dB = P_dc P_sq.
SwapLpResult solve_swap_lp(const StochasticMatrix& p_sq_prime, const StochasticMatrix& p_db,
                           const StochasticMatrix& p_sq, double tol = kSwapTol);
/// Same, with P_sq' = P_sq.
SwapLpResult solve_swap_lp(const StochasticMatrix& p_db, const StochasticMatrix& p_sq, double tol = kSwapTol);

/// max |lhs_pp * p_db - p_dc * p_sq|.
double swap_residual(const RealMatrix& lhs_pp, const RealMatrix& p_db, const RealMatrix& p_dc, const RealMatrix& p_sq);

/// Closed-form P_dc for the multi-click coarse-graining: the dark-count block on
/// non-multi events, column sums of the multi rows in the last row, and a
/// fixed multi column. Requires P_dB never to map a multi-click to a
/// no-click or single-click event.
StochasticMatrix coarse_grained_dc_ansatz(const StochasticMatrix& p_db, const CoarseGraining& cg);

}  // namespace flagsq
