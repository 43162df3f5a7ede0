// Copyright 2026 The flagsquash Authors
// SPDX-License-Identifier: Apache-2.0

#include "flagsq/squashing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace flagsq {

namespace {

int cutoff_of(const SpaceLayout& layout) {
  int n = -1;
  for (const auto& b : layout.blocks()) {
    if (!b.label.is_flag()) n = std::max(n, b.label.photon_number());
  }
  return n;
}

}  // namespace

SquashedPOVM::SquashedPOVM(SpaceLayout layout, EventTable events, std::vector<BlockOperator> elements)
    : POVM(std::move(layout), std::move(events), std::move(elements)) {
  const SpaceLayout& l = this->layout();
  if (!l.contains(BlockLabel::flag()) || l.dim(BlockLabel::flag()) != static_cast<Index>(size())) {
    throw std::invalid_argument("SquashedPOVM: flag block must have one dimension per event");
  }
  cutoff_ = cutoff_of(l);
  for (int m = 0; m <= cutoff_; ++m) {
    if (!l.contains(BlockLabel::photons(m))) throw std::invalid_argument("SquashedPOVM: photon blocks must be m = 0..N");
  }
  const Index n = flag_dim();
  for (std::size_t i = 0; i < size(); ++i) {
    const Matrix f = element(i).block(BlockLabel::flag());
    if ((f - basis_projector(n, static_cast<Index>(i))).cwiseAbs().maxCoeff() > 1e-12) {
      throw std::invalid_argument("SquashedPOVM: flag block of element " + this->events()[i].label + " is not |i><i|");
    }
  }
}

std::vector<BlockLabel> SquashedPOVM::preserved_labels() const {
  std::vector<BlockLabel> out;
  for (int m = 0; m <= cutoff_; ++m) out.push_back(BlockLabel::photons(m));
  return out;
}

SquashedPOVM flag_state_target(const POVM& povm, int cutoff) {
  const SpaceLayout& src = povm.layout();
  if (cutoff < 1 || cutoff > cutoff_of(src)) throw std::invalid_argument("flag_state_target: cutoff outside the POVM's blocks");
  const auto modes = static_cast<int>(src.dim(BlockLabel::photons(1)));
  const auto n = static_cast<Index>(povm.size());
  SpaceLayout layout = SpaceLayout::squashed(modes, cutoff, n);
  std::vector<BlockOperator> elements;
  for (std::size_t i = 0; i < povm.size(); ++i) {
    BlockOperator f(layout);
    for (int m = 0; m <= cutoff; ++m) {
      const auto label = BlockLabel::photons(m);
      if (povm.element(i).has_block(label)) f.set_block(label, povm.element(i).block(label));
    }
    f.set_block(BlockLabel::flag(), basis_projector(n, static_cast<Index>(i)));
    elements.push_back(std::move(f));
  }
  return SquashedPOVM(std::move(layout), povm.events(), std::move(elements));
}

WeightBound weight_bound(const POVM& povm, const std::vector<std::size_t>& events, double p_e, int cutoff) {
  if (!(p_e >= 0.0 && p_e <= 1.0)) throw std::invalid_argument("weight_bound: p_e must lie in [0, 1]");
  if (events.empty()) throw std::invalid_argument("weight_bound: empty event set");
  const BlockOperator gamma = povm.union_element(events);

  double in = std::numeric_limits<double>::infinity();
  double out = std::numeric_limits<double>::infinity();
  for (const auto& b : povm.layout().blocks()) {
    if (b.label.is_flag()) throw std::invalid_argument("weight_bound: POVM must be on photon blocks only");
    const double lmin = min_eigenvalue(gamma.block(b.label));
    if (b.label.photon_number() <= cutoff) {
      in = std::min(in, lmin);
    } else {
      out = std::min(out, lmin);
    }
  }
  if (!std::isfinite(in) || !std::isfinite(out)) {
    throw std::invalid_argument("weight_bound: POVM needs blocks on both sides of the cutoff");
  }
  WeightBound w;
  w.events = events;
  w.cutoff = cutoff;
  w.p_e = p_e;
  w.lambda_in = in;
  w.lambda_out = out;
  if (w.denominator() <= 1e-12) throw std::domain_error("weight_bound: event is uninformative (lambda_out <= lambda_in)");
  w.value = std::clamp((p_e - in) / w.denominator(), 0.0, 1.0);
  return w;
}

GridWeightBound weight_bound_grid_minimum(const DetectionSetup& setup, const std::vector<RealVector>& grid,
                                          double p_e, int cutoff, int povm_cutoff) {
  if (grid.empty()) throw std::invalid_argument("weight_bound_grid_minimum: empty grid");
  GridWeightBound best;
  for (const auto& eta : grid) {
    const POVM povm = build_threshold_povm(setup.with_efficiencies(eta), povm_cutoff);
    const auto multi = povm.events().indices(ClickClass::multi);
    const double w = weight_bound(povm, multi, p_e, cutoff).value;
    if (best.grid_points == 0 || w < best.value) {
      best.value = w;
      best.argmin = eta;
    }
    ++best.grid_points;
  }
  return best;
}

double propagate_weight(double w, double p00, double eta_min, double eta_star) {
  if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("propagate_weight: W must lie in [0, 1]");
  if (!(p00 >= 0.0 && p00 <= 1.0)) throw std::invalid_argument("propagate_weight: P00 must lie in [0, 1]");
  if (!(eta_star > 0.0 && eta_star <= 1.0)) throw std::invalid_argument("propagate_weight: eta_star must lie in (0, 1]");
  if (!(eta_min >= 0.0 && eta_min <= eta_star)) throw std::invalid_argument("propagate_weight: need 0 <= eta_min <= eta_star");
  return 1.0 - p00 * (eta_min / eta_star) * (1.0 - w);
}

Interval eta_star_range(double eta_min, double eta_max) {
  if (!(eta_min > 0.0 && eta_min <= eta_max && eta_max <= 1.0)) {
    throw std::invalid_argument("eta_star_range: need 0 < eta_min <= eta_max <= 1");
  }
  const double spread = eta_max - eta_min;
  if (spread >= 1.0) throw std::invalid_argument("eta_star_range: efficiency spread must be below 1");
  const double lo = eta_min / (1.0 - spread);
  if (lo > 1.0) throw std::domain_error("eta_star_range: efficiencies too spread, no admissible eta_star");
  return {lo, 1.0};
}

}  // namespace flagsq
