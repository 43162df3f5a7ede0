// Copyright 2026 The flagsquash Authors
// SPDX-License-Identifier: Apache-2.0

// descriptor.hpp: JSON setup descriptors for the command-line tool.
//
//   {
//     "setup": "passive-bb84" | "active-bb84" | "custom",
//     "mode_map": {"re": [[...]], "im": [[...]]},     custom only, k x n_in
//     "eta": {"lo": 0.5, "hi": 0.6},                  number or per-detector list
//     "dark_rate": {"max": 0.01},                     number or per-detector list
//     "cutoff": 3,                                    POVM truncation for the weight bound
//     "eta_star": 1.0,                                optional, default 1
//     "mode": "flag" | "qubit-squasher",
//     "coarse_grain": "none" | "multiclick",
//     "weight": {"W": 0.0, "p_e": 0.001},             both optional
//     "tolerances": {"cptp": 1e-9, "equivalence": 1e-9,
//                    "weight_relation": 1e-12, "feasibility": 1e-6},
//     "seed": 0,
//     "name": "free text"
//   }

#pragma once

#include "flagsq/detectors.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace flagsq {

enum class SetupKind { passive_bb84, active_bb84, custom };
enum class AnalysisMode { flag, qubit_squasher };
enum class CoarseGrain { none, multiclick };

std::string_view to_string(SetupKind k);
std::string_view to_string(AnalysisMode m);
std::string_view to_string(CoarseGrain c);
CoarseGrain parse_coarse_grain(std::string_view s);

struct Tolerances {
  double cptp = 1e-9;
  double equivalence = 1e-9;
  double weight_relation = 1e-12;
  double feasibility = 1e-6;
};

struct SetupDescriptor {
  std::string name;
  SetupKind kind = SetupKind::passive_bb84;
  Matrix mode_map;  ///< custom setups only
  RealVector eta_lo;
  RealVector eta_hi;
  RealVector d_max;
  int cutoff = 1;
  std::optional<double> eta_star;
  AnalysisMode mode = AnalysisMode::flag;
  CoarseGrain coarse_grain = CoarseGrain::none;
  double weight_in = 0.0;
  std::optional<double> p_e;
  Tolerances tol;
  std::uint64_t seed = 0;

  int detectors() const { return static_cast<int>(eta_lo.size()); }
  double eta_min() const { return eta_lo.minCoeff(); }
  double eta_max() const { return eta_hi.maxCoeff(); }
  double eta_star_or_default() const { return eta_star.value_or(1.0); }
};

/// Parse or validation failure. `field` is a dotted path ("eta.lo"), empty
/// for syntax errors; `line`/`column` are 1-based and 0 when unknown.
class DescriptorError : public std::runtime_error {
 public:
  DescriptorError(const std::string& what, std::string field, int line = 0, int column = 0)
      : std::runtime_error(what), field_(std::move(field)), line_(line), column_(column) {}
  const std::string& field() const { return field_; }
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  std::string field_;
  int line_;
  int column_;
};

SetupDescriptor parse_descriptor(std::string_view text);
SetupDescriptor load_descriptor(const std::filesystem::path& path);

/// One detection setup per basis (active BB84 gives Z and X), all efficiencies 1.
std::vector<DetectionSetup> setups_for(const SetupDescriptor& desc);

/// Every corner of the box [eta_lo, eta_hi], duplicates removed, in a fixed order.
std::vector<RealVector> eta_corners(const SetupDescriptor& desc);

}  // namespace flagsq
