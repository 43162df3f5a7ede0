// Copyright 2026 The flagsquash Authors
// SPDX-License-Identifier: Apache-2.0

// squashing.hpp: Flag-state target measurements and bounds on the weight
// outside the preserved subspace.

#pragma once

#include "flagsq/detectors.hpp"

#include <cstddef>
#include <vector>

namespace flagsq {

/// POVM on blocks m = 0..N plus a flag block with one flag per event.
/// Element i carries |i><i| on the flag block.
class SquashedPOVM : public POVM {
 public:
  SquashedPOVM() = default;
  /// Checks the POVM invariants and that flag block i of element j is
  /// delta_ij within 1e-12.
  SquashedPOVM(SpaceLayout layout, EventTable events, std::vector<BlockOperator> elements);

  int cutoff() const { return cutoff_; }
  Index flag_dim() const { return static_cast<Index>(size()); }
  /// m = 0..N.
  std::vector<BlockLabel> preserved_labels() const;

 private:
  int cutoff_ = 0;
};

/// Copies blocks m = 0..N of `povm` and appends the flag |i><i| to element i.
SquashedPOVM flag_state_target(const POVM& povm, int cutoff = 1);

/// Upper bound on the weight outside the blocks m <= N.
struct WeightBound {
  double value = 0.0;
  std::vector<std::size_t> events;
  int cutoff = 1;
  double p_e = 0.0;
  double lambda_in = 0.0;   ///< lambda_min of Gamma_e on m <= N
  double lambda_out = 0.0;  ///< lambda_min of Gamma_e on m > N (blocks present in the POVM)
  double denominator() const { return lambda_out - lambda_in; }
};

/// W = (p_e - lambda_in) / (lambda_out - lambda_in), clamped to [0, 1], for the
/// event union Gamma_e = sum of the listed elements. The POVM must carry at
/// least one block above `cutoff`. Throws std::domain_error when the
/// denominator is <= 1e-12.
WeightBound weight_bound(const POVM& povm, const std::vector<std::size_t>& events, double p_e, int cutoff = 1);

/// Minimum of weight_bound over a list of efficiency vectors. This is only a
/// grid minimum, not a bound valid for every efficiency in the range.
struct GridWeightBound {
  double value = 1.0;
  RealVector argmin;
  std::size_t grid_points = 0;
};

/// Evaluates weight_bound on the multi-click union of `setup` at each
/// efficiency vector in `grid`, with the POVM truncated at `povm_cutoff`.
GridWeightBound weight_bound_grid_minimum(const DetectionSetup& setup, const std::vector<RealVector>& grid,
                                          double p_e, int cutoff = 1, int povm_cutoff = kMaxCutoff);

/// W' = 1 - P00 (eta_min / eta_star) (1 - W).
double propagate_weight(double w, double p00, double eta_min, double eta_star);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x, double tol = 0.0) const { return x >= lo - tol && x <= hi + tol; }
};

/// Admissible common efficiencies [eta_min / (1 - (eta_max - eta_min)), 1].
Interval eta_star_range(double eta_min, double eta_max);

}  // namespace flagsq
