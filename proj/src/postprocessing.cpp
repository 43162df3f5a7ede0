// Copyright 2026 The flagsquash Authors
// SPDX-License-Identifier: Apache-2.0

#include "flagsq/postprocessing.hpp"

#include "flagsq/simplex.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace flagsq {

namespace {

std::vector<std::string> index_labels(Index n) {
  std::vector<std::string> out;
  for (Index i = 0; i < n; ++i) out.push_back(std::to_string(i));
  return out;
}

void check_probabilities(const RealVector& v, const char* what, bool allow_zero) {
  for (Index i = 0; i < v.size(); ++i) {
    const bool ok = allow_zero ? (v[i] >= 0.0 && v[i] <= 1.0) : (v[i] > 0.0 && v[i] <= 1.0);
    if (!ok) throw std::invalid_argument(std::string(what) + ": entry outside its admissible range");
  }
}

}  // namespace

StochasticMatrix::StochasticMatrix(RealMatrix entries, std::vector<std::string> row_labels,
                                   std::vector<std::string> col_labels)
    : p_(std::move(entries)), row_labels_(std::move(row_labels)), col_labels_(std::move(col_labels)) {
  if (p_.size() == 0) throw std::invalid_argument("StochasticMatrix: empty matrix");
  if (row_labels_.empty()) row_labels_ = index_labels(p_.rows());
  if (col_labels_.empty()) col_labels_ = index_labels(p_.cols());
  if (static_cast<Index>(row_labels_.size()) != p_.rows() || static_cast<Index>(col_labels_.size()) != p_.cols()) {
    throw std::invalid_argument("StochasticMatrix: label count mismatch");
  }
  for (Index j = 0; j < p_.cols(); ++j) {
    for (Index i = 0; i < p_.rows(); ++i) {
      if (!std::isfinite(p_(i, j)) || p_(i, j) < -1e-12) {
        throw std::invalid_argument("StochasticMatrix: negative or non-finite entry");
      }
      p_(i, j) = std::max(0.0, p_(i, j));
    }
    if (std::abs(p_.col(j).sum() - 1.0) > kStochasticTol) {
      throw std::invalid_argument("StochasticMatrix: column " + col_labels_[static_cast<std::size_t>(j)] +
                                  " does not sum to 1");
    }
  }
}

StochasticMatrix StochasticMatrix::identity(const std::vector<std::string>& labels) {
  const auto n = static_cast<Index>(labels.size());
  return StochasticMatrix(RealMatrix::Identity(n, n), labels, labels);
}

StochasticMatrix operator*(const StochasticMatrix& a, const StochasticMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("StochasticMatrix product: dimension mismatch");
  return StochasticMatrix(a.matrix() * b.matrix(), a.row_labels(), b.col_labels());
}

CoarseGraining::CoarseGraining(RealMatrix entries, EventTable source, EventTable target)
    : StochasticMatrix(std::move(entries), target.labels(), source.labels()),
      source_(std::move(source)),
      target_(std::move(target)) {
  for (Index j = 0; j < cols(); ++j) {
    int ones = 0;
    for (Index i = 0; i < rows(); ++i) {
      const double v = (*this)(i, j);
      if (v != 0.0 && v != 1.0) throw std::invalid_argument("CoarseGraining: entries must be 0 or 1");
      ones += v == 1.0;
    }
    if (ones != 1) throw std::invalid_argument("CoarseGraining: each column needs exactly one 1");
  }
}

std::vector<std::size_t> CoarseGraining::assignment() const {
  std::vector<std::size_t> out(static_cast<std::size_t>(cols()));
  for (Index j = 0; j < cols(); ++j) {
    Index i = 0;
    matrix().col(j).maxCoeff(&i);
    out[static_cast<std::size_t>(j)] = static_cast<std::size_t>(i);
  }
  return out;
}

StochasticMatrix dark_count_matrix(const RealVector& d) {
  check_probabilities(d, "dark_count_matrix", true);
  const int k = static_cast<int>(d.size());
  const EventTable events = enumerate_events(k);
  const auto n = static_cast<Index>(events.size());
  RealMatrix p = RealMatrix::Zero(n, n);
  for (Index col = 0; col < n; ++col) {
    const std::uint32_t c = *events[static_cast<std::size_t>(col)].pattern;
    for (Index row = 0; row < n; ++row) {
      const std::uint32_t cp = *events[static_cast<std::size_t>(row)].pattern;
      if ((c & cp) != c) continue;  // dark counts never erase a click
      double prob = 1.0;
      for (int i = 0; i < k; ++i) {
        if (c & (1u << i)) continue;
        prob *= (cp & (1u << i)) ? d[i] : 1.0 - d[i];
      }
      p(row, col) = prob;
    }
  }
  return StochasticMatrix(std::move(p), events.labels(), events.labels());
}

double no_dark_count_probability(const RealVector& d) {
  check_probabilities(d, "no_dark_count_probability", true);
  return (RealVector::Ones(d.size()) - d).prod();
}

StochasticMatrix single_photon_loss_matrix(const RealVector& eta) {
  check_probabilities(eta, "single_photon_loss_matrix", false);
  const Index k = eta.size();
  RealMatrix p = RealMatrix::Zero(k + 1, k + 1);
  p(0, 0) = 1.0;
  for (Index s = 0; s < k; ++s) {
    p(0, s + 1) = 1.0 - eta[s];
    p(s + 1, s + 1) = eta[s];
  }
  const auto labels = single_click_events(static_cast<int>(k)).labels();
  return StochasticMatrix(std::move(p), labels, labels);
}

StochasticMatrix qubit_squasher_postprocessing() {
  RealMatrix p(3, 4);
  p << 1, 0, 0, 0,
       0, 1, 0, 0.5,
       0, 0, 1, 0.5;
  return StochasticMatrix(std::move(p), single_click_events(2).labels(), enumerate_events(2).labels());
}

DarkCountConditionReport validate_dark_count_pp(const StochasticMatrix& p, const EventTable& events, double tol) {
  const auto n = static_cast<Index>(events.size());
  if (p.rows() != n || p.cols() != n) {
    throw std::invalid_argument("validate_dark_count_pp: matrix must be square over the event table");
  }
  DarkCountConditionReport report;
  const auto zero = static_cast<Index>(events.no_click_index());
  const auto singles = events.indices(ClickClass::single);

  for (auto s : singles) {
    for (auto sp : singles) {
      const auto r = static_cast<Index>(s);
      const auto c = static_cast<Index>(sp);
      if (s != sp && p(r, c) > tol) {
        report.no_single_swap = false;
        report.violations.push_back({1, r, c, p(r, c)});
      }
    }
  }
  for (Index i = 0; i < n; ++i) {
    if (i != zero && p(zero, i) > tol) {
      report.no_click_erasure = false;
      report.violations.push_back({2, zero, i, p(zero, i)});
    }
  }
  for (auto s : singles) {
    const auto r = static_cast<Index>(s);
    if (p(r, r) < p(zero, zero) - tol) {
      report.single_retention = false;
      report.violations.push_back({3, r, r, p(r, r) - p(zero, zero)});
    }
  }
  return report;
}

CoarseGraining multiclick_coarse_graining(const EventTable& events) {
  if (events.detectors() < 2) throw std::invalid_argument("multiclick_coarse_graining: need k >= 2");
  EventTable target = multiclick_coarse_events(events.detectors());
  const auto multi_row = static_cast<Index>(target.size() - 1);
  RealMatrix m = RealMatrix::Zero(static_cast<Index>(target.size()), static_cast<Index>(events.size()));
  for (std::size_t j = 0; j < events.size(); ++j) {
    const auto col = static_cast<Index>(j);
    if (events[j].cls == ClickClass::multi) {
      m(multi_row, col) = 1.0;
    } else {
      m(static_cast<Index>(target.index_of_pattern(*events[j].pattern)), col) = 1.0;
    }
  }
  return CoarseGraining(std::move(m), events, std::move(target));
}

POVM apply_postprocessing(const StochasticMatrix& p, const POVM& povm, const EventTable& target) {
  if (p.cols() != static_cast<Index>(povm.size()) || p.rows() != static_cast<Index>(target.size())) {
    throw std::invalid_argument("apply_postprocessing: dimension mismatch");
  }
  std::vector<BlockOperator> out;
  for (Index i = 0; i < p.rows(); ++i) {
    BlockOperator e(povm.layout());
    for (Index j = 0; j < p.cols(); ++j) {
      if (p(i, j) != 0.0) e += p(i, j) * povm.element(static_cast<std::size_t>(j));
    }
    out.push_back(std::move(e));
  }
  return POVM(povm.layout(), target, std::move(out));
}

POVM apply_postprocessing(const CoarseGraining& cg, const POVM& povm) {
  if (!(cg.source() == povm.events())) throw std::invalid_argument("apply_postprocessing: event table mismatch");
  return apply_postprocessing(cg, povm, cg.target());
}

double swap_residual(const RealMatrix& lhs_pp, const RealMatrix& p_db, const RealMatrix& p_dc, const RealMatrix& p_sq) {
  return (lhs_pp * p_db - p_dc * p_sq).cwiseAbs().maxCoeff();
}

SwapLpResult solve_swap_lp(const StochasticMatrix& p_sq_prime, const StochasticMatrix& p_db,
                           const StochasticMatrix& p_sq, double tol) {
  const Index r = p_sq.rows();
  const Index c = p_sq.cols();
  if (p_db.rows() != c || p_db.cols() != c || p_sq_prime.rows() != r || p_sq_prime.cols() != c) {
    throw std::invalid_argument("solve_swap_lp: dimension mismatch");
  }
  const RealMatrix target = p_sq_prime.matrix() * p_db.matrix();

  // Unknown x[i + r j] = P_dc(i, j).
  const Index n_vars = r * r;
  RealMatrix a = RealMatrix::Zero(r * c + r, n_vars);
  RealVector b = RealVector::Zero(r * c + r);
  for (Index row = 0; row < r; ++row) {
    for (Index col = 0; col < c; ++col) {
      const Index eq = row + r * col;
      for (Index j = 0; j < r; ++j) a(eq, row + r * j) = p_sq(j, col);
      b[eq] = target(row, col);
    }
  }
  for (Index j = 0; j < r; ++j) {
    for (Index i = 0; i < r; ++i) a(r * c + j, i + r * j) = 1.0;
    b[r * c + j] = 1.0;
  }

  const Phase1Result lp = phase1_simplex(a, b, tol);
  const RealMatrix p_dc = Eigen::Map<const RealMatrix>(lp.x.data(), r, r);

  SwapLpResult result;
  result.iterations = lp.iterations;
  result.infeasibility = lp.infeasibility;
  const double col_dev = (p_dc.colwise().sum().array() - 1.0).abs().maxCoeff();
  result.residual = std::max(swap_residual(p_sq_prime.matrix(), p_db.matrix(), p_dc, p_sq.matrix()), col_dev);
  result.feasible = lp.feasible && result.residual <= tol;
  if (result.feasible) result.p_dc.emplace(p_dc, p_sq.row_labels(), p_sq.row_labels());
  return result;
}

SwapLpResult solve_swap_lp(const StochasticMatrix& p_db, const StochasticMatrix& p_sq, double tol) {
  return solve_swap_lp(p_sq, p_db, p_sq, tol);
}

StochasticMatrix coarse_grained_dc_ansatz(const StochasticMatrix& p_db, const CoarseGraining& cg) {
  const EventTable& events = cg.source();
  const auto n = static_cast<Index>(events.size());
  if (p_db.rows() != n || p_db.cols() != n) throw std::invalid_argument("coarse_grained_dc_ansatz: dimension mismatch");
  const auto multis = events.indices(ClickClass::multi);
  for (auto m : multis) {
    for (Index i = 0; i < n; ++i) {
      if (events[static_cast<std::size_t>(i)].cls == ClickClass::multi) continue;
      if (p_db(i, static_cast<Index>(m)) > 1e-12) {
        throw std::invalid_argument("coarse_grained_dc_ansatz: P_dB maps multi-click " + events[m].label + " to " +
                                    events[static_cast<std::size_t>(i)].label);
      }
    }
  }
  const auto assign = cg.assignment();
  const Index t = cg.rows();
  RealMatrix p_dc = RealMatrix::Zero(t, t);
  for (std::size_t j = 0; j < events.size(); ++j) {
    if (events[j].cls == ClickClass::multi) continue;
    const auto col = static_cast<Index>(assign[j]);
    // Target column of a non-multi event: its P_dB column pushed through the coarse-graining.
    for (Index i = 0; i < n; ++i) p_dc(static_cast<Index>(assign[static_cast<std::size_t>(i)]), col) += p_db(i, static_cast<Index>(j));
  }
  const auto multi_target = static_cast<Index>(cg.target().indices(ClickClass::multi).front());
  p_dc(multi_target, multi_target) = 1.0;
  return StochasticMatrix(std::move(p_dc), cg.target().labels(), cg.target().labels());
}

}  // namespace flagsq
