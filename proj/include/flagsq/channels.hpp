// Copyright 2026 The flagsquash Authors
// SPDX-License-Identifier: Apache-2.0

// channels.hpp: Noise channels built from block copies and measure-and-prepare
// branches, their Choi matrices, and the checks that certify them.
//
// Choi convention: J = sum_{a,b} |a><b| (x) Phi(|a><b|), input factor first.
// Then Tr[F Phi(rho)] = Tr[(rho^T (x) F) J] and trace preservation reads
// Tr_2 J = I.

#pragma once

#include "flagsq/postprocessing.hpp"
#include "flagsq/squashing.hpp"

#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace flagsq {

/// rho -> weight * P rho P, P the projector onto the listed blocks. Labels
/// must exist with equal dimensions in both layouts; coherences between the
/// listed blocks are kept.
struct BlockCopy {
  std::vector<BlockLabel> labels;
  double weight = 1.0;
};

/// rho -> weight * sum_i Tr[E_i rho] sigma_i. Effects are dense on the input
/// layout, preparations dense on the output layout.
struct MeasurePrepare {
  std::vector<Matrix> effects;
  std::vector<Matrix> preparations;
  double weight = 1.0;
};

using Branch = std::variant<BlockCopy, MeasurePrepare>;

/// A linear map given as a sum of branches per stage; stages are applied in
/// order. The Choi matrix is assembled once at construction.
class QuantumChannel {
 public:
  QuantumChannel(SpaceLayout input, SpaceLayout output, std::vector<Branch> branches);

  static QuantumChannel identity(const SpaceLayout& layout);
  /// Keeps the diagonal blocks, drops all inter-block coherences.
  static QuantumChannel pinch(const SpaceLayout& layout);

  const SpaceLayout& input_layout() const { return stages_.front().input; }
  const SpaceLayout& output_layout() const { return stages_.back().output; }
  std::size_t stage_count() const { return stages_.size(); }

  /// Applies the map to any (not necessarily Hermitian) matrix on the input layout.
  Matrix apply(const Matrix& x) const;
  const Matrix& choi() const { return choi_; }

  /// `second` after `first`.
  friend QuantumChannel compose(const QuantumChannel& second, const QuantumChannel& first);

 private:
  struct Stage {
    SpaceLayout input;
    SpaceLayout output;
    std::vector<Branch> branches;
  };
  explicit QuantumChannel(std::vector<Stage> stages);
  static Matrix apply_stage(const Stage& s, const Matrix& x);
  static void validate(const Stage& s);

  std::vector<Stage> stages_;
  Matrix choi_;
};

QuantumChannel compose(const QuantumChannel& second, const QuantumChannel& first);

/// Throws on layout mismatch; the result is validated as a density matrix.
DensityLike apply_channel(const QuantumChannel& ch, const DensityLike& rho);

/// n^2 Hermitian operators spanning all n x n matrices: |a><a|,
/// (|a><b| + |b><a|)/2 and i(|a><b| - |b><a|)/2 for a < b.
std::vector<Matrix> hermitian_basis(Index n);

/// Tr[P rho] for the projector P onto the listed blocks.
double block_weight(const SpaceLayout& layout, const Matrix& rho, const std::vector<BlockLabel>& labels);

// --------------------------- Constructions -----------------------------------

/// Vacuum (+) qubit noise channel for active BB84 with equal dark-count rate d
/// in both detectors. Acts on photon_blocks(2, 1).
QuantumChannel bb84_simple_noise_channel(double d);

/// Three-outcome qubit target POVM (no-click, first detector, second detector)
/// on vacuum (+) qubit for the given basis ("Z" or "X").
POVM qubit_target_povm(std::string_view basis);

/// Dark-count noise channel on m=0 (+) m=1 (+) flag. `p_db` is indexed by the
/// events of `f_eta` and must satisfy the three dark-count conditions;
/// `f_eta` must have cutoff 1 and obey "no more clicks than photons".
QuantumChannel dark_count_channel(const StochasticMatrix& p_db, const SquashedPOVM& f_eta);

/// Loss noise channel mapping statistics of the efficiencies `eta` to the
/// common efficiency `eta_star`. `f_lossless` is the squashed lossless POVM.
QuantumChannel loss_channel(const RealVector& eta, double eta_star, const SquashedPOVM& f_lossless);

/// Q^{eta, eta_star} over the events of `events` (identity on multi-clicks).
StochasticMatrix loss_remainder_matrix(const RealVector& eta, double eta_star, const EventTable& events);

/// (1-q) rho_P (+) (q sum_i Tr[rho_P Q_i] |i><i| + rho_F) with
/// Q_i = (F_noise_i - (1-q) F_ideal_i) / q.
QuantumChannel generic_channel(const SquashedPOVM& f_noise, const SquashedPOVM& f_ideal, double q);

inline constexpr double kDeviationPsdTol = 1e-9;

struct DeviationResult {
  double q = 1.0;
  bool attained = true;     ///< false when even q = 1 fails the PSD test
  std::string diagnostic;   ///< offending element when !attained
};

/// Smallest q in [0, 1] with F_noise_i - (1-q) F_ideal_i PSD at 1e-9 for all
/// i, by bisection to width 1e-10. Returns the feasible end of the bracket.
DeviationResult min_deviation_q(const POVM& f_noise, const POVM& f_ideal);

/// F~_i = F_i / (1 + k delta) + delta / (1 + k delta) I. The result no longer
/// has orthonormal flags, so it is a plain POVM.
POVM inf_norm_mixing(const POVM& f_noise, double delta);

// --------------------------- Certification -----------------------------------

struct CptpReport {
  double min_eigenvalue = 0.0;
  double hermitian_deviation = 0.0;
  double trace_deviation = 0.0;  ///< max |Tr_2 J - I| entry
  double tol = 0.0;
  bool pass = false;
};

/// Hermitian within 1e-12, min eigenvalue >= -tol, trace deviation <= tol.
CptpReport verify_cptp(const QuantumChannel& ch, double tol = 1e-9);

struct EquivalenceReport {
  double max_residual = 0.0;
  RealVector per_event;
  double tol = 0.0;
  bool pass = false;
};

/// max over the Hermitian basis of |P Tr[F_before rho_b] - Tr[F_after Phi(rho_b)]|.
EquivalenceReport verify_statistics_equivalence(const RealMatrix& p, const POVM& f_before, const POVM& f_after,
                                                const QuantumChannel& ch, double tol = 1e-9);
EquivalenceReport verify_statistics_equivalence(const StochasticMatrix& p, const POVM& f_before,
                                                const POVM& f_after, const QuantumChannel& ch, double tol = 1e-9);

/// Partial trace over the second factor of a (d1 d2) x (d1 d2) matrix.
Matrix partial_trace_second(const Matrix& j, Index d1, Index d2);

}  // namespace flagsq
