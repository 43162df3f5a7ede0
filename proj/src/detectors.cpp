// Copyright 2026 The flagsquash Authors
// SPDX-License-Identifier: Apache-2.0

#include "flagsq/detectors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace flagsq {

std::string_view to_string(ClickClass c) {
  switch (c) {
    case ClickClass::no_click: return "no-click";
    case ClickClass::single: return "single";
    case ClickClass::multi: return "multi";
  }
  return "?";
}

std::string pattern_label(std::uint32_t pattern, int k) {
  std::string s(static_cast<std::size_t>(k), '0');
  for (int i = 0; i < k; ++i) {
    if (pattern & (1u << i)) s[static_cast<std::size_t>(k - 1 - i)] = '1';
  }
  return s;
}

// --------------------------- EventTable --------------------------------------

EventTable::EventTable(int detectors, std::vector<Event> events) : detectors_(detectors), events_(std::move(events)) {
  if (detectors_ < 1) throw std::invalid_argument("EventTable: need at least one detector");
  const auto n_no_click = std::count_if(events_.begin(), events_.end(),
                                        [](const Event& e) { return e.cls == ClickClass::no_click; });
  if (n_no_click != 1) throw std::invalid_argument("EventTable: exactly one no-click event required");
  std::set<std::string> labels;
  for (const auto& e : events_) {
    if (!labels.insert(e.label).second) throw std::invalid_argument("EventTable: duplicate label " + e.label);
  }
}

std::size_t EventTable::no_click_index() const { return indices(ClickClass::no_click).front(); }

std::vector<std::size_t> EventTable::indices(ClickClass cls) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < events_.size(); ++i) {
    if (events_[i].cls == cls) out.push_back(i);
  }
  return out;
}

std::size_t EventTable::index_of_pattern(std::uint32_t pattern) const {
  for (std::size_t i = 0; i < events_.size(); ++i) {
    if (events_[i].pattern == pattern) return i;
  }
  throw std::out_of_range("EventTable: no event for pattern " + pattern_label(pattern, detectors_));
}

std::vector<std::string> EventTable::labels() const {
  std::vector<std::string> out;
  for (const auto& e : events_) out.push_back(e.label);
  return out;
}

namespace {

ClickClass class_of(std::uint32_t pattern) {
  switch (std::popcount(pattern)) {
    case 0: return ClickClass::no_click;
    case 1: return ClickClass::single;
    default: return ClickClass::multi;
  }
}

void check_detector_count(int k, int lo) {
  if (k < lo || k > 16) throw std::invalid_argument("event table: detector count out of range");
}

std::vector<Event> no_click_and_singles(int k) {
  std::vector<Event> events{{ClickClass::no_click, 0u, pattern_label(0u, k)}};
  for (int i = 0; i < k; ++i) {
    const auto p = 1u << i;
    events.push_back({ClickClass::single, p, pattern_label(p, k)});
  }
  return events;
}

}  // namespace

EventTable enumerate_events(int k) {
  check_detector_count(k, 1);
  std::vector<std::uint32_t> patterns(std::size_t{1} << k);
  std::iota(patterns.begin(), patterns.end(), 0u);
  std::stable_sort(patterns.begin(), patterns.end(),
                   [](std::uint32_t a, std::uint32_t b) { return std::popcount(a) < std::popcount(b); });
  std::vector<Event> events;
  events.reserve(patterns.size());
  for (auto p : patterns) events.push_back({class_of(p), p, pattern_label(p, k)});
  return EventTable(k, std::move(events));
}

EventTable multiclick_coarse_events(int k) {
  check_detector_count(k, 2);
  auto events = no_click_and_singles(k);
  events.push_back({ClickClass::multi, std::nullopt, "multi"});
  return EventTable(k, std::move(events));
}

EventTable single_click_events(int k) {
  check_detector_count(k, 1);
  return EventTable(k, no_click_and_singles(k));
}

// --------------------------- Setups ------------------------------------------

void DetectionSetup::validate() const {
  const int k = detectors();
  if (k < 1 || input_modes() < 1) throw std::invalid_argument("DetectionSetup: empty mode map");
  if (efficiencies.size() != k) throw std::invalid_argument("DetectionSetup: need one efficiency per detector");
  for (Index i = 0; i < k; ++i) {
    if (!(efficiencies[i] >= 0.0 && efficiencies[i] <= 1.0)) {
      throw std::invalid_argument("DetectionSetup: efficiency outside [0, 1]");
    }
  }
  const Matrix gram = mode_map.adjoint() * mode_map;
  const double dev = (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
  if (dev > 1e-10) throw std::invalid_argument("DetectionSetup: mode map is not an isometry");
}

DetectionSetup DetectionSetup::with_efficiencies(RealVector eta) const {
  DetectionSetup out = *this;
  out.efficiencies = std::move(eta);
  return out;
}

DetectionSetup passive_bb84_setup(RealVector eta) {
  const double h = 1.0 / std::sqrt(2.0);
  Matrix v(4, 2);
  v << h, 0.0,
       0.0, h,
       0.5, 0.5,
       0.5, -0.5;
  return DetectionSetup{v, std::move(eta), std::nullopt};
}

DetectionSetup active_bb84_setup(std::string_view basis, RealVector eta) {
  Matrix v(2, 2);
  if (basis == "Z") {
    v.setIdentity();
  } else if (basis == "X") {
    const double h = 1.0 / std::sqrt(2.0);
    v << h, h,
         h, -h;
  } else {
    throw std::invalid_argument("active_bb84_setup: basis must be \"Z\" or \"X\"");
  }
  return DetectionSetup{v, std::move(eta), std::string(basis)};
}

// --------------------------- POVM --------------------------------------------

POVM::POVM(SpaceLayout layout, EventTable events, std::vector<BlockOperator> elements)
    : layout_(std::move(layout)), events_(std::move(events)), elements_(std::move(elements)) {
  if (elements_.size() != events_.size()) throw std::invalid_argument("POVM: one element per event required");
  for (const auto& e : elements_) {
    if (!(e.layout() == layout_)) throw std::invalid_argument("POVM: element layout mismatch");
    if (!psd_check(e, kPovmTol)) throw std::invalid_argument("POVM: element is not positive semidefinite");
  }
  if (completeness_error() > kPovmTol) throw std::invalid_argument("POVM: elements do not sum to the identity");
}

BlockOperator POVM::union_element(const std::vector<std::size_t>& indices) const {
  BlockOperator sum(layout_);
  for (auto i : indices) sum += elements_.at(i);
  return sum;
}

RealVector POVM::probabilities(const Matrix& rho) const {
  if (rho.rows() != layout_.total_dim() || rho.cols() != layout_.total_dim()) {
    throw std::invalid_argument("POVM::probabilities: state does not match layout");
  }
  RealVector p(static_cast<Index>(elements_.size()));
  for (std::size_t i = 0; i < elements_.size(); ++i) {
    Complex acc = 0.0;
    for (const auto& [label, blk] : elements_[i].stored_blocks()) {
      const Index off = layout_.offset(label);
      acc += (blk * rho.block(off, off, blk.rows(), blk.cols())).trace();
    }
    p[static_cast<Index>(i)] = acc.real();
  }
  return p;
}

double POVM::completeness_error() const {
  BlockOperator sum(layout_);
  for (const auto& e : elements_) sum += e;
  return max_abs_difference(sum, BlockOperator::identity(layout_));
}

namespace {

using Occupation = std::vector<int>;

/// Fock basis of `photons` photons in `modes` modes, first mode most occupied first.
std::vector<Occupation> fock_basis(int modes, int photons) {
  std::vector<Occupation> out;
  Occupation occ(static_cast<std::size_t>(modes), 0);
  auto rec = [&](auto&& self, int mode, int left) -> void {
    if (mode == modes - 1) {
      occ[static_cast<std::size_t>(mode)] = left;
      out.push_back(occ);
      return;
    }
    for (int n = left; n >= 0; --n) {
      occ[static_cast<std::size_t>(mode)] = n;
      self(self, mode + 1, left - n);
    }
  };
  rec(rec, 0, photons);
  return out;
}

/// Output amplitudes of an input Fock state under the linear map `w`
/// (output modes x input modes), keyed by output occupation.
std::map<Occupation, Complex> propagate(const Matrix& w, const Occupation& input) {
  const auto n_out = static_cast<std::size_t>(w.rows());
  std::map<Occupation, Complex> state{{Occupation(n_out, 0), Complex(1.0)}};
  for (std::size_t j = 0; j < input.size(); ++j) {
    for (int rep = 0; rep < input[j]; ++rep) {
      std::map<Occupation, Complex> next;
      for (const auto& [occ, amp] : state) {
        for (std::size_t o = 0; o < n_out; ++o) {
          const Complex c = w(static_cast<Index>(o), static_cast<Index>(j));
          if (c == Complex(0.0)) continue;
          Occupation up = occ;
          up[o] += 1;
          next[up] += amp * c * std::sqrt(static_cast<double>(up[o]));
        }
      }
      state = std::move(next);
    }
    // (a_j^dagger)^n / sqrt(n!)
    double fact = 1.0;
    for (int i = 2; i <= input[j]; ++i) fact *= i;
    for (auto& [occ, amp] : state) amp /= std::sqrt(fact);
  }
  return state;
}

}  // namespace

POVM build_threshold_povm(const DetectionSetup& setup, int cutoff) {
  setup.validate();
  const int k = setup.detectors();
  const int modes = setup.input_modes();
  if (cutoff < 1 || cutoff > kMaxCutoff) throw std::invalid_argument("build_threshold_povm: cutoff must be in 1..3");
  if (k > kMaxDetectors) throw std::invalid_argument("build_threshold_povm: at most 4 detectors supported");

  // Detector modes 0..k-1 followed by one loss mode per detector.
  Matrix w(2 * k, modes);
  for (int d = 0; d < k; ++d) {
    const double eta = setup.efficiencies[d];
    w.row(d) = std::sqrt(eta) * setup.mode_map.row(d);
    w.row(k + d) = std::sqrt(1.0 - eta) * setup.mode_map.row(d);
  }

  const EventTable events = enumerate_events(k);
  const SpaceLayout layout = SpaceLayout::photon_blocks(modes, cutoff);
  std::vector<BlockOperator> elements(events.size(), BlockOperator(layout));

  for (int m = 0; m <= cutoff; ++m) {
    const auto basis = fock_basis(modes, m);
    const auto dim = static_cast<Index>(basis.size());
    // Rows: output configurations; columns: input basis states.
    std::map<Occupation, Eigen::VectorXcd> amplitudes;
    for (Index b = 0; b < dim; ++b) {
      for (const auto& [occ, amp] : propagate(w, basis[static_cast<std::size_t>(b)])) {
        auto [it, inserted] = amplitudes.try_emplace(occ, Eigen::VectorXcd::Zero(dim));
        it->second[b] += amp;
      }
    }
    std::vector<Matrix> blocks(events.size(), Matrix::Zero(dim, dim));
    for (const auto& [occ, row] : amplitudes) {
      std::uint32_t pattern = 0;
      for (int d = 0; d < k; ++d) {
        if (occ[static_cast<std::size_t>(d)] > 0) pattern |= 1u << d;
      }
      blocks[events.index_of_pattern(pattern)] += row.conjugate() * row.transpose();
    }
    for (std::size_t e = 0; e < events.size(); ++e) {
      if (blocks[e].cwiseAbs().maxCoeff() > 0.0) elements[e].set_block(BlockLabel::photons(m), blocks[e]);
    }
  }
  return POVM(layout, events, std::move(elements));
}

SinglePhotonReport verify_single_photon_assumption(const POVM& povm, double tol) {
  SinglePhotonReport report;
  const auto& layout = povm.layout();
  auto check = [&](std::size_t i, BlockLabel label) {
    if (!layout.contains(label)) return;
    SinglePhotonCheck c;
    c.event = i;
    c.label = povm.events()[i].label;
    c.block = label;
    c.max_abs = povm.element(i).has_block(label) ? povm.element(i).block(label).cwiseAbs().maxCoeff() : 0.0;
    c.ok = c.max_abs <= tol;
    if (!c.ok) {
      report.pass = false;
      report.offending.push_back(c.label + " (" + label.str() + ")");
    }
    report.checks.push_back(c);
  };
  for (auto i : povm.events().indices(ClickClass::multi)) {
    check(i, BlockLabel::photons(0));
    check(i, BlockLabel::photons(1));
  }
  for (auto i : povm.events().indices(ClickClass::single)) check(i, BlockLabel::photons(0));
  return report;
}

}  // namespace flagsq
