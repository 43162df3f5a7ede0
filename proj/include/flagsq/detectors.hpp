// Copyright 2026 The flagsquash Authors
// SPDX-License-Identifier: Apache-2.0

// detectors.hpp: Click-pattern tables and threshold-detector POVMs on a
// truncated Fock space for passive linear-optics setups.

#pragma once

#include "flagsq/fock.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flagsq {

enum class ClickClass { no_click, single, multi };

std::string_view to_string(ClickClass c);

/// One measurement outcome. `pattern` is the detector bitmask (bit i set when
/// detector i+1 clicked); coarse-grained events that merge several patterns
/// carry no pattern.
struct Event {
  ClickClass cls = ClickClass::no_click;
  std::optional<std::uint32_t> pattern;
  std::string label;
  bool operator==(const Event&) const = default;
};

/// Ordered list of outcomes of a k-detector setup (or of a coarse-graining of
/// one). Ordered by increasing number of clicks.
class EventTable {
 public:
  EventTable() = default;
  EventTable(int detectors, std::vector<Event> events);

  int detectors() const { return detectors_; }
  std::size_t size() const { return events_.size(); }
  const std::vector<Event>& events() const { return events_; }
  const Event& operator[](std::size_t i) const { return events_.at(i); }

  std::size_t no_click_index() const;
  std::vector<std::size_t> indices(ClickClass cls) const;
  std::size_t index_of_pattern(std::uint32_t pattern) const;
  std::vector<std::string> labels() const;

  bool operator==(const EventTable&) const = default;

 private:
  int detectors_ = 0;
  std::vector<Event> events_;
};

/// All 2^k click patterns, ordered by popcount then numeric mask.
EventTable enumerate_events(int k);

/// No-click, the k single clicks, and one merged "multi" event.
EventTable multiclick_coarse_events(int k);

/// No-click followed by the k single clicks (target of a qubit-type squasher).
EventTable single_click_events(int k);

/// Bit string of a pattern, detector k leftmost.
std::string pattern_label(std::uint32_t pattern, int k);

// --------------------------- Setups ------------------------------------------

inline constexpr int kMaxDetectors = 4;
inline constexpr int kMaxCutoff = 3;

/// Passive linear-optics detection setup. `mode_map` (k x n_in) sends input
/// mode j to detector modes; its columns must be orthonormal (an isometry).
struct DetectionSetup {
  Matrix mode_map;
  RealVector efficiencies;
  std::optional<std::string> basis_tag;

  int detectors() const { return static_cast<int>(mode_map.rows()); }
  int input_modes() const { return static_cast<int>(mode_map.cols()); }

  /// Throws std::invalid_argument on a non-isometric map or efficiencies outside [0, 1].
  void validate() const;
  DetectionSetup with_efficiencies(RealVector eta) const;
};

/// Polarization BB84 with a 50/50 passive basis choice. Detectors: H, V, +, -.
DetectionSetup passive_bb84_setup(RealVector eta = RealVector::Ones(4));

/// One basis of active BB84: "Z" (H/V) or "X" (+/-), two detectors.
DetectionSetup active_bb84_setup(std::string_view basis, RealVector eta = RealVector::Ones(2));

// --------------------------- POVMs -------------------------------------------

inline constexpr double kPovmTol = 1e-10;

/// A POVM on a block layout, one element per event. Construction checks that
/// every element is PSD and the elements sum to the identity within 1e-10.
class POVM {
 public:
  POVM() = default;
  POVM(SpaceLayout layout, EventTable events, std::vector<BlockOperator> elements);

  const SpaceLayout& layout() const { return layout_; }
  const EventTable& events() const { return events_; }
  const std::vector<BlockOperator>& elements() const { return elements_; }
  const BlockOperator& element(std::size_t i) const { return elements_.at(i); }
  std::size_t size() const { return elements_.size(); }

  /// Sum of the elements with the given indices (a coarse-grained event).
  BlockOperator union_element(const std::vector<std::size_t>& indices) const;

  /// Outcome probabilities Tr[F_i rho] for a dense operator on the layout.
  RealVector probabilities(const Matrix& rho) const;

  double completeness_error() const;

 private:
  SpaceLayout layout_;
  EventTable events_;
  std::vector<BlockOperator> elements_;
};

/// Threshold-detector POVM without dark counts on photon blocks m = 0..cutoff.
/// Every m-photon input Fock state is pushed through the mode map and per-
/// detector loss; pattern c collects all output configurations in which
/// exactly the detectors of c see at least one photon.
POVM build_threshold_povm(const DetectionSetup& setup, int cutoff);

struct SinglePhotonCheck {
  std::size_t event = 0;
  std::string label;
  BlockLabel block = BlockLabel::photons(0);
  double max_abs = 0.0;
  bool ok = true;
};

struct SinglePhotonReport {
  std::vector<SinglePhotonCheck> checks;
  std::vector<std::string> offending;
  bool pass = true;
};

/// Checks "no more clicks than photons": multi-click elements vanish on m=0 and
/// m=1, single-click elements vanish on m=0.
SinglePhotonReport verify_single_photon_assumption(const POVM& povm, double tol = kPovmTol);

}  // namespace flagsq
