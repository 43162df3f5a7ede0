// Copyright 2026 The flagsquash Authors
// SPDX-License-Identifier: Apache-2.0

#include "flagsq/analysis.hpp"

#include "flagsq/channels.hpp"
#include "flagsq/feasibility.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace flagsq {

namespace {

constexpr double kCoarseSwapTol = 1e-12;

std::string prefix_for(const DetectionSetup& s) { return s.basis_tag ? *s.basis_tag + "." : ""; }

// Worst residual of one named check across efficiency corners.
class CheckAccumulator {
 public:
  void record(const std::string& name, const std::string& op, double residual, double tol, bool pass) {
    auto [it, fresh] = entries_.try_emplace(name, CheckRecord{name, op, true, 0.0, tol});
    if (fresh) order_.push_back(name);
    it->second.residual = std::max(it->second.residual, residual);
    it->second.pass = it->second.pass && pass;
  }
  void flush(Certificate& cert) {
    for (const auto& n : order_) cert.add(entries_.at(n));
    entries_.clear();
    order_.clear();
  }

 private:
  std::map<std::string, CheckRecord> entries_;
  std::vector<std::string> order_;
};

// Event table, optional coarse-graining, and the dark-count post-processing on it.
struct EventModel {
  EventTable events;
  std::optional<CoarseGraining> cg;
  StochasticMatrix p;
};

EventModel event_model(const SetupDescriptor& desc, Certificate& cert, const std::string& prefix) {
  const EventTable fine = enumerate_events(desc.detectors());
  const StochasticMatrix p_db = dark_count_matrix(desc.d_max);
  if (desc.coarse_grain == CoarseGrain::none) return {fine, std::nullopt, p_db};
  CoarseGraining cg = multiclick_coarse_graining(fine);
  StochasticMatrix p_dc = coarse_grained_dc_ansatz(p_db, cg);
  const double swap = swap_residual(cg.matrix(), p_db.matrix(), p_dc.matrix(), cg.matrix());
  cert.add({prefix + "coarse_grain.swap", "coarse_grained_dc_ansatz", swap <= kCoarseSwapTol, swap, kCoarseSwapTol});
  EventTable target = cg.target();
  return {std::move(target), std::move(cg), std::move(p_dc)};
}

POVM build(const DetectionSetup& setup, const RealVector& eta, const EventModel& model) {
  POVM povm = build_threshold_povm(setup.with_efficiencies(eta), 1);
  return model.cg ? apply_postprocessing(*model.cg, povm) : povm;
}

// max over the Hermitian basis of |Tr[Phi(X) Pi_{<=1}] - expected(X)|.
template <typename Expected>
double weight_relation_residual(const QuantumChannel& ch, Expected expected) {
  const SpaceLayout& in = ch.input_layout();
  const SpaceLayout& out = ch.output_layout();
  const std::vector<BlockLabel> low{BlockLabel::photons(0), BlockLabel::photons(1)};
  double worst = 0.0;
  for (const auto& x : hermitian_basis(in.total_dim())) {
    const double got = block_weight(out, ch.apply(x), low);
    worst = std::max(worst, std::abs(got - expected(in, x)));
  }
  return worst;
}

void record_cptp(CheckAccumulator& acc, const std::string& name, const QuantumChannel& ch, double tol) {
  const CptpReport r = verify_cptp(ch, tol);
  const double residual = std::max({-r.min_eigenvalue, r.trace_deviation, r.hermitian_deviation, 0.0});
  acc.record(name, "verify_cptp", residual, tol, r.pass);
}

void record_equivalence(CheckAccumulator& acc, const std::string& name, const RealMatrix& p, const POVM& before,
                        const POVM& after, const QuantumChannel& ch, double tol) {
  const EquivalenceReport r = verify_statistics_equivalence(p, before, after, ch, tol);
  acc.record(name, "verify_statistics_equivalence", r.max_residual, tol, r.pass);
}

struct FlagSummary {
  double p00 = 1.0;
  bool ok = false;
};

// Builds and certifies the dark-count, loss and composed channels for one setup.
FlagSummary certify_flag_channels(const SetupDescriptor& desc, const DetectionSetup& setup, Certificate& cert) {
  const std::string pre = prefix_for(setup);
  FlagSummary summary;
  const EventModel model = event_model(desc, cert, pre);
  const auto conditions = validate_dark_count_pp(model.p, model.events);
  cert.add({pre + "dark_count.conditions", "validate_dark_count_pp", conditions.pass(),
            static_cast<double>(conditions.violations.size()), 0.0});
  if (!conditions.pass()) return summary;
  const auto zero = static_cast<Index>(model.events.no_click_index());
  summary.p00 = model.p(zero, zero);

  const double eta_star = desc.eta_star_or_default();
  bool eta_star_ok = false;
  try {
    const Interval range = eta_star_range(desc.eta_min(), desc.eta_max());
    cert.derived["eta_star_lower"] = range.lo;
    eta_star_ok = range.contains(eta_star, 1e-12);
  } catch (const std::domain_error&) {
    // No admissible eta_star at all; reported below like an out-of-range one.
  }
  if (!eta_star_ok) {
    cert.fail("loss decomposition needs eta_star in [eta_min / (1 - (eta_max - eta_min)), 1]");
  }

  const SquashedPOVM f_star =
      flag_state_target(build(setup, RealVector::Constant(desc.detectors(), eta_star), model), 1);
  const SquashedPOVM f_lossless = flag_state_target(build(setup, RealVector::Ones(desc.detectors()), model), 1);
  const auto n = static_cast<Index>(model.events.size());
  const RealMatrix identity = RealMatrix::Identity(n, n);

  CheckAccumulator acc;
  bool all_single_photon = true;
  for (const auto& eta : eta_corners(desc)) {
    const SquashedPOVM f_eta = flag_state_target(build(setup, eta, model), 1);
    const auto sp = verify_single_photon_assumption(f_eta);
    double sp_residual = 0.0;
    for (const auto& c : sp.checks) sp_residual = std::max(sp_residual, c.max_abs);
    acc.record(pre + "single_photon", "verify_single_photon_assumption", sp_residual, kPovmTol, sp.pass);
    if (!sp.pass) {
      all_single_photon = false;
      continue;
    }

    const QuantumChannel phi_d = dark_count_channel(model.p, f_eta);
    record_cptp(acc, pre + "dark_count.cptp", phi_d, desc.tol.cptp);
    record_equivalence(acc, pre + "dark_count.statistics", model.p.matrix(), f_eta, f_eta, phi_d, desc.tol.equivalence);
    const double p00 = summary.p00;
    const double wr_d = weight_relation_residual(phi_d, [&](const SpaceLayout& l, const Matrix& x) {
      return p00 * block_weight(l, x, {BlockLabel::photons(0), BlockLabel::photons(1)});
    });
    acc.record(pre + "dark_count.weight_relation", "dark_count_channel", wr_d, desc.tol.weight_relation,
               wr_d <= desc.tol.weight_relation);

    if (!eta_star_ok) continue;
    const double ratio = eta.minCoeff() / eta_star;
    const QuantumChannel phi_l = loss_channel(eta, eta_star, f_lossless);
    record_cptp(acc, pre + "loss.cptp", phi_l, desc.tol.cptp);
    record_equivalence(acc, pre + "loss.statistics", identity, f_eta, f_star, phi_l, desc.tol.equivalence);
    const double wr_l = weight_relation_residual(phi_l, [&](const SpaceLayout& l, const Matrix& x) {
      return block_weight(l, x, {BlockLabel::photons(0)}) + ratio * block_weight(l, x, {BlockLabel::photons(1)});
    });
    acc.record(pre + "loss.weight_relation", "loss_channel", wr_l, desc.tol.weight_relation,
               wr_l <= desc.tol.weight_relation);

    const QuantumChannel phi = compose(phi_l, phi_d);
    record_cptp(acc, pre + "composed.cptp", phi, desc.tol.cptp);
    record_equivalence(acc, pre + "composed.statistics", model.p.matrix(), f_eta, f_star, phi, desc.tol.equivalence);
    const double wr = weight_relation_residual(phi, [&](const SpaceLayout& l, const Matrix& x) {
      return p00 * (block_weight(l, x, {BlockLabel::photons(0)}) + ratio * block_weight(l, x, {BlockLabel::photons(1)}));
    });
    acc.record(pre + "composed.weight_relation", "compose", wr, desc.tol.weight_relation,
               wr <= desc.tol.weight_relation);
  }
  acc.flush(cert);
  summary.ok = all_single_photon && eta_star_ok;
  return summary;
}

void add_common_derived(const SetupDescriptor& desc, Certificate& cert) {
  cert.derived["eta_min"] = desc.eta_min();
  cert.derived["eta_max"] = desc.eta_max();
  cert.derived["eta_star"] = desc.eta_star_or_default();
  cert.derived["d_max"] = desc.d_max.maxCoeff();
  cert.derived["corners"] = static_cast<double>(eta_corners(desc).size());
}

void weight_section(const SetupDescriptor& desc, double p00, Certificate& cert) {
  double w = desc.weight_in;
  if (desc.p_e) {
    double worst = 0.0;
    for (const auto& setup : setups_for(desc)) {
      const GridWeightBound g = weight_bound_grid_minimum(setup, eta_corners(desc), *desc.p_e, 1, desc.cutoff);
      cert.derived[prefix_for(setup) + "W_grid_minimum"] = g.value;
      worst = std::max(worst, g.value);
    }
    w = worst;
    cert.notes["weight_bound"] =
        "minimum over the efficiency corners of the multi-click weight bound; a grid minimum, not a bound "
        "proven for every efficiency in the range";
  }
  const double eta_star = desc.eta_star_or_default();
  cert.derived["W_in"] = w;
  cert.derived["ratio"] = desc.eta_min() / eta_star;
  cert.derived["P00"] = p00;
  if (desc.eta_min() > eta_star) {
    cert.fail("weight propagation needs eta_min <= eta_star");
    return;
  }
  cert.derived["W_out"] = propagate_weight(w, p00, desc.eta_min(), eta_star);
}

double p00_for(const SetupDescriptor& desc) {
  if (desc.coarse_grain == CoarseGrain::none) return no_dark_count_probability(desc.d_max);
  const EventTable fine = enumerate_events(desc.detectors());
  const CoarseGraining cg = multiclick_coarse_graining(fine);
  return coarse_grained_dc_ansatz(dark_count_matrix(desc.d_max), cg)(0, 0);
}

void require_active(const SetupDescriptor& desc, const char* who) {
  if (desc.kind != SetupKind::active_bb84) throw std::invalid_argument(std::string(who) + " needs an active-bb84 descriptor");
}

std::optional<StochasticMatrix> swap_lp_section(const SetupDescriptor& desc, Certificate& cert) {
  require_active(desc, "swap-lp");
  const StochasticMatrix p_sq = qubit_squasher_postprocessing();
  const StochasticMatrix p_db = dark_count_matrix(desc.d_max);
  const SwapLpResult lp = solve_swap_lp(p_db, p_sq);
  cert.derived["d1"] = desc.d_max[0];
  cert.derived["d2"] = desc.d_max[1];
  cert.derived["swap_lp.infeasibility"] = lp.infeasibility;
  cert.add({"swap_lp", "solve_swap_lp", lp.feasible, lp.feasible ? lp.residual : lp.infeasibility, kSwapTol});
  if (!lp.feasible) {
    cert.notes["swap_lp"] = "no stochastic P_dc solves P_sq P_dB = P_dc P_sq; the qubit squasher needs equal dark-count rates";
    return std::nullopt;
  }
  const RealMatrix& m = lp.p_dc->matrix();
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      cert.derived["P_dc[" + std::to_string(i) + "][" + std::to_string(j) + "]"] = m(i, j);
    }
  }
  cert.derived["P00"] = m(0, 0);
  return lp.p_dc;
}

void qubit_channel_section(const SetupDescriptor& desc, const StochasticMatrix& p_dc, Certificate& cert) {
  const double d = desc.d_max[0];
  const QuantumChannel ch = bb84_simple_noise_channel(d);
  CheckAccumulator acc;
  record_cptp(acc, "qubit.cptp", ch, desc.tol.cptp);
  for (const char* basis : {"Z", "X"}) {
    const POVM f = qubit_target_povm(basis);
    record_equivalence(acc, std::string(basis) + ".qubit.statistics", p_dc.matrix(), f, f, ch, desc.tol.equivalence);
  }
  acc.flush(cert);
  cert.notes["qubit_squasher"] = "efficiencies are not modelled in qubit-squasher mode";
}

Certificate make_certificate(const SetupDescriptor& desc, const char* command) {
  Certificate cert;
  cert.command = command;
  cert.descriptor = desc;
  return cert;
}

}  // namespace

SetupDescriptor apply_overrides(SetupDescriptor desc, const AnalysisOverrides& o) {
  if (o.tol) {
    if (!(*o.tol > 0.0)) throw std::invalid_argument("--tol must be positive");
    desc.tol.cptp = desc.tol.equivalence = *o.tol;
  }
  if (o.seed) desc.seed = *o.seed;
  if (o.eta_star) {
    if (!(*o.eta_star > 0.0 && *o.eta_star <= 1.0)) throw std::invalid_argument("--eta-star must lie in (0, 1]");
    desc.eta_star = *o.eta_star;
  }
  if (o.coarse_grain) {
    if (*o.coarse_grain == CoarseGrain::multiclick && desc.detectors() < 2) {
      throw std::invalid_argument("multiclick coarse-graining needs at least 2 detectors");
    }
    desc.coarse_grain = *o.coarse_grain;
  }
  return desc;
}

Certificate run_verify_channel(const SetupDescriptor& desc) {
  Certificate cert = make_certificate(desc, "verify-channel");
  add_common_derived(desc, cert);
  if (desc.mode == AnalysisMode::qubit_squasher) {
    if (auto p_dc = swap_lp_section(desc, cert)) qubit_channel_section(desc, *p_dc, cert);
    return cert;
  }
  for (const auto& setup : setups_for(desc)) {
    const FlagSummary s = certify_flag_channels(desc, setup, cert);
    cert.derived["P00"] = s.p00;
  }
  return cert;
}

Certificate run_analysis(const SetupDescriptor& desc) {
  Certificate cert = run_verify_channel(desc);
  cert.command = "analyze";
  if (desc.mode == AnalysisMode::flag) weight_section(desc, p00_for(desc), cert);
  return cert;
}

Certificate run_swap_lp(const SetupDescriptor& desc) {
  Certificate cert = make_certificate(desc, "swap-lp");
  swap_lp_section(desc, cert);
  return cert;
}

Certificate run_weight(const SetupDescriptor& desc) {
  Certificate cert = make_certificate(desc, "weight");
  add_common_derived(desc, cert);
  if (desc.mode == AnalysisMode::qubit_squasher) throw std::invalid_argument("weight needs flag mode");
  weight_section(desc, p00_for(desc), cert);
  return cert;
}

Certificate run_choi_check(const SetupDescriptor& desc) {
  Certificate cert = make_certificate(desc, "choi-check");
  FeasibilityOptions opt;
  opt.tol = desc.tol.feasibility;
  opt.seed = desc.seed;

  auto check = [&](const std::string& name, const RealMatrix& p, const POVM& before, const POVM& after) {
    const Index dim = before.layout().total_dim() * after.layout().total_dim();
    if (dim > 64) {
      throw std::invalid_argument("choi-check is limited to input x output dimension <= 64 (got " + std::to_string(dim) + ")");
    }
    const FeasibilityResult r = choi_feasibility(p, before, after, opt);
    cert.notes[name + ".verdict"] = std::string(to_string(r.verdict));
    cert.derived[name + ".iterations"] = r.iterations;
    cert.add({name, "choi_feasibility", r.verdict == Verdict::feasible, r.residual, opt.tol});
    if (r.witness) {
      const WitnessReport w = verify_choi_witness(*r.witness, p, before, after, opt.tol);
      const double res = std::max({-w.min_eigenvalue, w.trace_deviation, w.linear_residual, 0.0});
      cert.add({name + ".witness", "verify_choi_witness", w.pass(), res, opt.tol});
    }
  };

  if (desc.mode == AnalysisMode::qubit_squasher) {
    const auto p_dc = swap_lp_section(desc, cert);
    if (!p_dc) return cert;
    for (const char* basis : {"Z", "X"}) {
      const POVM f = qubit_target_povm(basis);
      check(std::string(basis) + ".choi", p_dc->matrix(), f, f);
    }
    return cert;
  }
  for (const auto& setup : setups_for(desc)) {
    const std::string pre = prefix_for(setup);
    const EventModel model = event_model(desc, cert, pre);
    const SquashedPOVM f_eta = flag_state_target(build(setup, desc.eta_lo, model), 1);
    check(pre + "choi", model.p.matrix(), f_eta, f_eta);
  }
  return cert;
}

}  // namespace flagsq
