// Copyright 2026 The flagsquash Authors
// SPDX-License-Identifier: Apache-2.0

// analysis.hpp: End-to-end pipelines behind the command-line subcommands.

#pragma once

#include "flagsq/certificate.hpp"

#include <cstdint>
#include <optional>

namespace flagsq {

/// Command-line overrides applied on top of a descriptor.
struct AnalysisOverrides {
  std::optional<double> tol;  ///< replaces the CPTP and equivalence tolerances
  std::optional<std::uint64_t> seed;
  std::optional<double> eta_star;
  std::optional<CoarseGrain> coarse_grain;
};

SetupDescriptor apply_overrides(SetupDescriptor desc, const AnalysisOverrides& o);

/// Full pipeline. Flag mode: POVMs at every efficiency corner, dark-count and
/// loss channels plus their composition, CPTP / statistics / weight-relation
/// checks, optional multi-click coarse-graining, weight propagation.
/// Qubit-squasher mode (active BB84): swap LP, then the vacuum (+) qubit
/// channel for both bases when the LP is feasible.
Certificate run_analysis(const SetupDescriptor& desc);

/// Swap LP only (qubit-squasher post-processing of an active-bb84 descriptor).
Certificate run_swap_lp(const SetupDescriptor& desc);

/// Channel construction and certification without the weight section.
Certificate run_verify_channel(const SetupDescriptor& desc);

/// Weight bound (grid minimum over efficiency corners when p_e is given) and
/// its propagation through the noise channels.
Certificate run_weight(const SetupDescriptor& desc);

/// Choi-matrix feasibility search. Restricted to input times output dimension
/// at most 64, which admits active BB84 in either mode.
Certificate run_choi_check(const SetupDescriptor& desc);

}  // namespace flagsq
