// Copyright 2026 The flagsquash Authors
// SPDX-License-Identifier: Apache-2.0

#include "flagsq/channels.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace flagsq {

namespace {

Matrix flag_projector(const SpaceLayout& layout, Index i) {
  const Index n = layout.dim(BlockLabel::flag());
  return embed_block(layout, BlockLabel::flag(), basis_projector(n, i));
}

Matrix vacuum_projector(const SpaceLayout& layout) {
  return embed_block(layout, BlockLabel::photons(0), Matrix::Ones(1, 1));
}

// Effect of element i restricted to one block, embedded densely.
Matrix restricted_effect(const POVM& povm, std::size_t i, BlockLabel label) {
  return embed_block(povm.layout(), label, povm.element(i).block(label));
}

bool is_zero(const Matrix& m) { return m.size() == 0 || m.cwiseAbs().maxCoeff() == 0.0; }

void require_cutoff_one(const SquashedPOVM& f, const char* who) {
  if (f.cutoff() != 1) throw std::invalid_argument(std::string(who) + ": squashed POVM must have cutoff 1");
}

}  // namespace

// --------------------------- QuantumChannel ----------------------------------

QuantumChannel::QuantumChannel(SpaceLayout input, SpaceLayout output, std::vector<Branch> branches)
    : QuantumChannel(std::vector<Stage>{Stage{std::move(input), std::move(output), std::move(branches)}}) {}

QuantumChannel::QuantumChannel(std::vector<Stage> stages) : stages_(std::move(stages)) {
  if (stages_.empty()) throw std::invalid_argument("QuantumChannel: no stages");
  for (const auto& s : stages_) validate(s);
  const Index din = input_layout().total_dim();
  const Index dout = output_layout().total_dim();
  choi_ = Matrix::Zero(din * dout, din * dout);
  for (Index a = 0; a < din; ++a) {
    for (Index b = 0; b < din; ++b) {
      Matrix unit = Matrix::Zero(din, din);
      unit(a, b) = 1.0;
      choi_.block(a * dout, b * dout, dout, dout) = apply(unit);
    }
  }
}

void QuantumChannel::validate(const Stage& s) {
  const Index din = s.input.total_dim();
  const Index dout = s.output.total_dim();
  for (const auto& br : s.branches) {
    if (const auto* c = std::get_if<BlockCopy>(&br)) {
      if (!(c->weight >= 0.0)) throw std::invalid_argument("BlockCopy: negative weight");
      for (auto l : c->labels) {
        if (!s.input.contains(l) || !s.output.contains(l) || s.input.dim(l) != s.output.dim(l)) {
          throw std::invalid_argument("BlockCopy: block " + l.str() + " missing or resized");
        }
      }
    } else {
      const auto& mp = std::get<MeasurePrepare>(br);
      if (!(mp.weight >= 0.0)) throw std::invalid_argument("MeasurePrepare: negative weight");
      if (mp.effects.size() != mp.preparations.size()) {
        throw std::invalid_argument("MeasurePrepare: one preparation per effect required");
      }
      for (std::size_t i = 0; i < mp.effects.size(); ++i) {
        if (mp.effects[i].rows() != din || mp.effects[i].cols() != din) {
          throw std::invalid_argument("MeasurePrepare: effect does not match the input layout");
        }
        if (mp.preparations[i].rows() != dout || mp.preparations[i].cols() != dout) {
          throw std::invalid_argument("MeasurePrepare: preparation does not match the output layout");
        }
      }
    }
  }
}

QuantumChannel QuantumChannel::identity(const SpaceLayout& layout) {
  return QuantumChannel(layout, layout, {BlockCopy{layout.labels(), 1.0}});
}

QuantumChannel QuantumChannel::pinch(const SpaceLayout& layout) {
  std::vector<Branch> branches;
  for (auto l : layout.labels()) branches.emplace_back(BlockCopy{{l}, 1.0});
  return QuantumChannel(layout, layout, std::move(branches));
}

Matrix QuantumChannel::apply_stage(const Stage& s, const Matrix& x) {
  Matrix out = Matrix::Zero(s.output.total_dim(), s.output.total_dim());
  for (const auto& br : s.branches) {
    if (const auto* c = std::get_if<BlockCopy>(&br)) {
      if (c->weight == 0.0) continue;
      for (auto a : c->labels) {
        for (auto b : c->labels) {
          const Index da = s.input.dim(a);
          const Index db = s.input.dim(b);
          out.block(s.output.offset(a), s.output.offset(b), da, db) +=
              c->weight * x.block(s.input.offset(a), s.input.offset(b), da, db);
        }
      }
    } else {
      const auto& mp = std::get<MeasurePrepare>(br);
      if (mp.weight == 0.0) continue;
      for (std::size_t i = 0; i < mp.effects.size(); ++i) {
        // Tr[E x] = sum_ab E_ab x_ba
        const Complex p = mp.effects[i].transpose().cwiseProduct(x).sum();
        if (p != 0.0) out += (mp.weight * p) * mp.preparations[i];
      }
    }
  }
  return out;
}

Matrix QuantumChannel::apply(const Matrix& x) const {
  if (x.rows() != input_layout().total_dim() || x.cols() != input_layout().total_dim()) {
    throw std::invalid_argument("QuantumChannel::apply: operator does not match the input layout");
  }
  Matrix y = x;
  for (const auto& s : stages_) y = apply_stage(s, y);
  return y;
}

QuantumChannel compose(const QuantumChannel& second, const QuantumChannel& first) {
  if (!(first.output_layout() == second.input_layout())) throw std::invalid_argument("compose: layout mismatch");
  auto stages = first.stages_;
  stages.insert(stages.end(), second.stages_.begin(), second.stages_.end());
  return QuantumChannel(std::move(stages));
}

DensityLike apply_channel(const QuantumChannel& ch, const DensityLike& rho) {
  if (!(rho.layout() == ch.input_layout())) throw std::invalid_argument("apply_channel: layout mismatch");
  return DensityLike::from_dense(ch.output_layout(), ch.apply(rho.matrix()));
}

std::vector<Matrix> hermitian_basis(Index n) {
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(n * n));
  const Complex i(0.0, 1.0);
  for (Index a = 0; a < n; ++a) {
    Matrix m = Matrix::Zero(n, n);
    m(a, a) = 1.0;
    out.push_back(std::move(m));
  }
  for (Index a = 0; a < n; ++a) {
    for (Index b = a + 1; b < n; ++b) {
      Matrix re = Matrix::Zero(n, n);
      re(a, b) = re(b, a) = 0.5;
      out.push_back(std::move(re));
      Matrix im = Matrix::Zero(n, n);
      im(a, b) = 0.5 * i;
      im(b, a) = -0.5 * i;
      out.push_back(std::move(im));
    }
  }
  return out;
}

double block_weight(const SpaceLayout& layout, const Matrix& rho, const std::vector<BlockLabel>& labels) {
  double w = 0.0;
  for (auto l : labels) w += extract_block(layout, l, rho).trace().real();
  return w;
}

// --------------------------- Constructions -----------------------------------

QuantumChannel bb84_simple_noise_channel(double d) {
  if (!(d >= 0.0 && d <= 1.0)) throw std::invalid_argument("bb84_simple_noise_channel: d must lie in [0, 1]");
  const SpaceLayout layout = SpaceLayout::photon_blocks(2, 1);
  const Matrix vac = vacuum_projector(layout);
  const Matrix qubit = block_projector(layout, {BlockLabel::photons(1)});

  std::vector<Branch> branches;
  branches.emplace_back(MeasurePrepare{{vac}, {(1 - d) * (1 - d) * vac + d * (1 - d / 2) * qubit}, 1.0});
  branches.emplace_back(BlockCopy{{BlockLabel::photons(1)}, 1 - d});
  // Depolarize the qubit with the remaining weight.
  branches.emplace_back(MeasurePrepare{{qubit}, {qubit / 2.0}, d});
  return QuantumChannel(layout, layout, std::move(branches));
}

POVM qubit_target_povm(std::string_view basis) {
  const SpaceLayout layout = SpaceLayout::photon_blocks(2, 1);
  const double h = 1.0 / std::sqrt(2.0);
  Eigen::Vector2cd u;
  Eigen::Vector2cd v;
  if (basis == "Z") {
    u << 1.0, 0.0;
    v << 0.0, 1.0;
  } else if (basis == "X") {
    u << h, h;
    v << h, -h;
  } else {
    throw std::invalid_argument("qubit_target_povm: basis must be \"Z\" or \"X\"");
  }
  std::vector<BlockOperator> elements;
  elements.push_back(direct_sum({{BlockLabel::photons(0), Matrix::Ones(1, 1)}, {BlockLabel::photons(1), Matrix::Zero(2, 2)}}));
  elements.push_back(direct_sum({{BlockLabel::photons(0), Matrix::Zero(1, 1)}, {BlockLabel::photons(1), u * u.adjoint()}}));
  elements.push_back(direct_sum({{BlockLabel::photons(0), Matrix::Zero(1, 1)}, {BlockLabel::photons(1), v * v.adjoint()}}));
  return POVM(layout, single_click_events(2), std::move(elements));
}

QuantumChannel dark_count_channel(const StochasticMatrix& p_db, const SquashedPOVM& f_eta) {
  require_cutoff_one(f_eta, "dark_count_channel");
  const EventTable& events = f_eta.events();
  const auto n = static_cast<Index>(events.size());
  if (p_db.rows() != n || p_db.cols() != n) throw std::invalid_argument("dark_count_channel: P_dB does not match the events");
  const auto conditions = validate_dark_count_pp(p_db, events);
  if (!conditions.pass()) throw std::invalid_argument("dark_count_channel: P_dB violates the dark-count conditions");
  const auto single_photon = verify_single_photon_assumption(f_eta);
  if (!single_photon.pass) {
    throw std::invalid_argument("dark_count_channel: POVM has more clicks than photons at " + single_photon.offending.front());
  }

  const SpaceLayout& layout = f_eta.layout();
  const auto zero = static_cast<Index>(events.no_click_index());
  const double p00 = p_db(zero, zero);
  const auto singles = events.indices(ClickClass::single);
  const auto multis = events.indices(ClickClass::multi);

  std::vector<Branch> branches;
  branches.emplace_back(BlockCopy{{BlockLabel::photons(1)}, p00});

  if (1.0 - p00 > 1e-15) {
    // Measure the single-photon block, prepare the classical state tau_C.
    MeasurePrepare tau;
    tau.weight = 1.0 - p00;
    std::vector<std::size_t> outcomes{events.no_click_index()};
    outcomes.insert(outcomes.end(), singles.begin(), singles.end());
    for (auto j : outcomes) {
      const auto col = static_cast<Index>(j);
      Matrix prep = Matrix::Zero(layout.total_dim(), layout.total_dim());
      for (auto m : multis) prep += p_db(static_cast<Index>(m), col) * flag_projector(layout, static_cast<Index>(m));
      for (auto s : singles) {
        const auto row = static_cast<Index>(s);
        const double c = p_db(row, col) - (s == j ? p00 : 0.0);
        prep += c * flag_projector(layout, row);
      }
      tau.effects.push_back(restricted_effect(f_eta, j, BlockLabel::photons(1)));
      tau.preparations.push_back(prep / (1.0 - p00));
    }
    branches.emplace_back(std::move(tau));
  }

  // Vacuum and flags: measure, post-process with P_dB, re-prepare. Outcome 0
  // of the vacuum measurement returns the vacuum itself.
  MeasurePrepare vac_branch;
  MeasurePrepare flag_branch;
  for (Index j = 0; j < n; ++j) {
    Matrix to_vac = Matrix::Zero(layout.total_dim(), layout.total_dim());
    Matrix to_flags = Matrix::Zero(layout.total_dim(), layout.total_dim());
    for (Index i = 0; i < n; ++i) {
      if (p_db(i, j) == 0.0) continue;
      to_flags += p_db(i, j) * flag_projector(layout, i);
      to_vac += p_db(i, j) * (i == zero ? vacuum_projector(layout) : flag_projector(layout, i));
    }
    const auto jj = static_cast<std::size_t>(j);
    Matrix e0 = restricted_effect(f_eta, jj, BlockLabel::photons(0));
    if (!is_zero(e0)) {
      vac_branch.effects.push_back(std::move(e0));
      vac_branch.preparations.push_back(std::move(to_vac));
    }
    flag_branch.effects.push_back(restricted_effect(f_eta, jj, BlockLabel::flag()));
    flag_branch.preparations.push_back(std::move(to_flags));
  }
  branches.emplace_back(std::move(vac_branch));
  branches.emplace_back(std::move(flag_branch));
  return QuantumChannel(layout, layout, std::move(branches));
}

StochasticMatrix loss_remainder_matrix(const RealVector& eta, double eta_star, const EventTable& events) {
  if (eta.size() != events.detectors()) throw std::invalid_argument("loss_remainder_matrix: one efficiency per detector");
  const double eta_min = eta.minCoeff();
  const Interval range = eta_star_range(eta_min, eta.maxCoeff());
  if (!range.contains(eta_star, 1e-12)) {
    throw std::invalid_argument("loss_remainder_matrix: eta_star outside [" + std::to_string(range.lo) + ", 1]");
  }
  const auto n = static_cast<Index>(events.size());
  RealMatrix q = RealMatrix::Identity(n, n);
  const auto zero = static_cast<Index>(events.no_click_index());
  for (auto s : events.indices(ClickClass::single)) {
    const auto col = static_cast<Index>(s);
    const int bit = std::countr_zero(*events[s].pattern);
    // With eta_star = eta_min all efficiencies coincide and the column is unused.
    const double keep = eta_star > eta_min ? eta_star * (eta[bit] - eta_min) / (eta_star - eta_min) : 1.0;
    q(col, col) = keep;
    q(zero, col) = 1.0 - keep;
  }
  return StochasticMatrix(std::move(q), events.labels(), events.labels());
}

QuantumChannel loss_channel(const RealVector& eta, double eta_star, const SquashedPOVM& f_lossless) {
  require_cutoff_one(f_lossless, "loss_channel");
  const StochasticMatrix q = loss_remainder_matrix(eta, eta_star, f_lossless.events());
  const double ratio = eta.minCoeff() / eta_star;
  const SpaceLayout& layout = f_lossless.layout();

  std::vector<Branch> branches;
  branches.emplace_back(BlockCopy{{BlockLabel::photons(0)}, 1.0});
  branches.emplace_back(BlockCopy{{BlockLabel::flag()}, 1.0});
  branches.emplace_back(BlockCopy{{BlockLabel::photons(1)}, ratio});
  if (1.0 - ratio > 1e-15) {
    MeasurePrepare rest;
    rest.weight = 1.0 - ratio;
    const auto n = static_cast<Index>(f_lossless.size());
    for (Index i = 0; i < n; ++i) {
      Matrix effect = Matrix::Zero(layout.total_dim(), layout.total_dim());
      for (Index j = 0; j < n; ++j) {
        if (q(i, j) != 0.0) effect += q(i, j) * restricted_effect(f_lossless, static_cast<std::size_t>(j), BlockLabel::photons(1));
      }
      if (is_zero(effect)) continue;
      rest.effects.push_back(std::move(effect));
      rest.preparations.push_back(flag_projector(layout, i));
    }
    branches.emplace_back(std::move(rest));
  }
  return QuantumChannel(layout, layout, std::move(branches));
}

QuantumChannel generic_channel(const SquashedPOVM& f_noise, const SquashedPOVM& f_ideal, double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("generic_channel: q must lie in [0, 1]");
  if (!(f_noise.layout() == f_ideal.layout()) || !(f_noise.events() == f_ideal.events())) {
    throw std::invalid_argument("generic_channel: POVMs must share layout and events");
  }
  const SpaceLayout& layout = f_noise.layout();
  const auto preserved = f_noise.preserved_labels();

  std::vector<BlockOperator> numerators;
  for (std::size_t i = 0; i < f_noise.size(); ++i) {
    BlockOperator d = f_noise.element(i) - (1.0 - q) * f_ideal.element(i);
    const double lmin = min_eigenvalue(d);
    if (lmin < -kDeviationPsdTol) {
      throw std::invalid_argument("generic_channel: F_noise - (1-q) F_ideal not PSD at event " +
                                  f_noise.events()[i].label + " (min eigenvalue " + std::to_string(lmin) + ")");
    }
    numerators.push_back(std::move(d));
  }

  std::vector<Branch> branches;
  branches.emplace_back(BlockCopy{preserved, 1.0 - q});
  branches.emplace_back(BlockCopy{{BlockLabel::flag()}, 1.0});
  if (q > 0.0) {
    MeasurePrepare rest;
    rest.weight = q;
    for (std::size_t i = 0; i < numerators.size(); ++i) {
      Matrix effect = Matrix::Zero(layout.total_dim(), layout.total_dim());
      for (auto l : preserved) effect += embed_block(layout, l, numerators[i].block(l));
      rest.effects.push_back(effect / q);
      rest.preparations.push_back(flag_projector(layout, static_cast<Index>(i)));
    }
    branches.emplace_back(std::move(rest));
  }
  return QuantumChannel(layout, layout, std::move(branches));
}

DeviationResult min_deviation_q(const POVM& f_noise, const POVM& f_ideal) {
  if (!(f_noise.layout() == f_ideal.layout()) || f_noise.size() != f_ideal.size()) {
    throw std::invalid_argument("min_deviation_q: POVMs must share layout and event count");
  }
  auto worst = [&](double q, std::size_t* where) {
    double lmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < f_noise.size(); ++i) {
      const double l = min_eigenvalue(f_noise.element(i) - (1.0 - q) * f_ideal.element(i));
      if (l < lmin) {
        lmin = l;
        if (where) *where = i;
      }
    }
    return lmin;
  };
  auto ok = [&](double q) { return worst(q, nullptr) >= -kDeviationPsdTol; };

  DeviationResult r;
  if (ok(0.0)) {
    r.q = 0.0;
    return r;
  }
  if (!ok(1.0)) {
    std::size_t at = 0;
    const double l = worst(1.0, &at);
    r.q = 1.0;
    r.attained = false;
    r.diagnostic = "F_noise element " + f_noise.events()[at].label + " has min eigenvalue " + std::to_string(l);
    return r;
  }
  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? hi : lo) = mid;
  }
  r.q = hi;
  return r;
}

POVM inf_norm_mixing(const POVM& f_noise, double delta) {
  if (!(delta >= 0.0)) throw std::invalid_argument("inf_norm_mixing: delta must be >= 0");
  const double k = static_cast<double>(f_noise.size());
  const double norm = 1.0 + k * delta;
  const BlockOperator id = BlockOperator::identity(f_noise.layout());
  std::vector<BlockOperator> out;
  for (const auto& f : f_noise.elements()) out.push_back((1.0 / norm) * f + (delta / norm) * id);
  return POVM(f_noise.layout(), f_noise.events(), std::move(out));
}

// --------------------------- Certification -----------------------------------

Matrix partial_trace_second(const Matrix& j, Index d1, Index d2) {
  if (j.rows() != d1 * d2 || j.cols() != d1 * d2) throw std::invalid_argument("partial_trace_second: dimension mismatch");
  Matrix out(d1, d1);
  for (Index a = 0; a < d1; ++a) {
    for (Index b = 0; b < d1; ++b) out(a, b) = j.block(a * d2, b * d2, d2, d2).trace();
  }
  return out;
}

CptpReport verify_cptp(const QuantumChannel& ch, double tol) {
  const Matrix& j = ch.choi();
  const Index din = ch.input_layout().total_dim();
  const Index dout = ch.output_layout().total_dim();
  CptpReport r;
  r.tol = tol;
  r.hermitian_deviation = hermitian_deviation(j);
  r.min_eigenvalue = hermitian_eigenvalues(symmetrized(j), std::numeric_limits<double>::infinity()).minCoeff();
  r.trace_deviation = (partial_trace_second(j, din, dout) - Matrix::Identity(din, din)).cwiseAbs().maxCoeff();
  r.pass = r.hermitian_deviation <= kHermitianTol && r.min_eigenvalue >= -tol && r.trace_deviation <= tol;
  return r;
}

EquivalenceReport verify_statistics_equivalence(const RealMatrix& p, const POVM& f_before, const POVM& f_after,
                                                const QuantumChannel& ch, double tol) {
  if (!(f_before.layout() == ch.input_layout()) || !(f_after.layout() == ch.output_layout())) {
    throw std::invalid_argument("verify_statistics_equivalence: POVM layouts do not match the channel");
  }
  if (p.cols() != static_cast<Index>(f_before.size()) || p.rows() != static_cast<Index>(f_after.size())) {
    throw std::invalid_argument("verify_statistics_equivalence: post-processing does not match the POVMs");
  }
  EquivalenceReport r;
  r.tol = tol;
  r.per_event = RealVector::Zero(p.rows());
  for (const auto& rho : hermitian_basis(ch.input_layout().total_dim())) {
    const RealVector lhs = p * f_before.probabilities(rho);
    const RealVector rhs = f_after.probabilities(ch.apply(rho));
    r.per_event = r.per_event.cwiseMax((lhs - rhs).cwiseAbs());
  }
  r.max_residual = r.per_event.size() ? r.per_event.maxCoeff() : 0.0;
  r.pass = r.max_residual <= tol;
  return r;
}

EquivalenceReport verify_statistics_equivalence(const StochasticMatrix& p, const POVM& f_before,
                                                const POVM& f_after, const QuantumChannel& ch, double tol) {
  return verify_statistics_equivalence(p.matrix(), f_before, f_after, ch, tol);
}

}  // namespace flagsq
