// Copyright 2026 The flagsquash Authors
// SPDX-License-Identifier: Apache-2.0

#include "flagsq/feasibility.hpp"

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <random>
#include <stdexcept>

namespace flagsq {

namespace {

constexpr double kPlateauDecrease = 1e-3;
constexpr int kPlateauWindow = 500;
constexpr double kNegativeRhsTol = 1e-9;
constexpr std::size_t kMaxSubsetOutcomes = 12;
constexpr std::size_t kAndersonMemory = 8;
constexpr double kAndersonReset = 10.0;
constexpr double kAndersonRegularization = 1e-10;

// Orthonormal real coordinates of a Hermitian D x D matrix: the diagonal, then
// sqrt(2) Re and sqrt(2) Im of each upper entry. Tr[X H] is the dot product.
RealVector hvec(const Matrix& h) {
  const Index d = h.rows();
  RealVector v(d * d);
  Index k = 0;
  for (Index a = 0; a < d; ++a) v[k++] = h(a, a).real();
  const double r2 = std::sqrt(2.0);
  for (Index a = 0; a < d; ++a) {
    for (Index b = a + 1; b < d; ++b) {
      v[k++] = r2 * h(a, b).real();
      v[k++] = r2 * h(a, b).imag();
    }
  }
  return v;
}

Matrix hunvec(const RealVector& v, Index d) {
  Matrix h(d, d);
  Index k = 0;
  for (Index a = 0; a < d; ++a) h(a, a) = v[k++];
  const double r2 = std::sqrt(2.0);
  for (Index a = 0; a < d; ++a) {
    for (Index b = a + 1; b < d; ++b) {
      const Complex z(v[k], v[k + 1]);
      k += 2;
      h(a, b) = z / r2;
      h(b, a) = std::conj(z) / r2;
    }
  }
  return h;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  }
  return out;
}

Matrix psd_part(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(h));
  const RealVector lam = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
}

struct Constraint {
  Matrix a;  // Tr[A J] = c
  double c = 0.0;
  bool psd = false;
};

void check_dims(const RealMatrix& p, const POVM& f_eta, const POVM& f_target) {
  if (p.cols() != static_cast<Index>(f_eta.size()) || p.rows() != static_cast<Index>(f_target.size())) {
    throw std::invalid_argument("choi_feasibility: post-processing does not match the POVMs");
  }
}

std::vector<Constraint> constraints(const RealMatrix& p, const POVM& f_eta, const POVM& f_target) {
  const Index din = f_eta.layout().total_dim();
  const Index dout = f_target.layout().total_dim();
  const auto basis = hermitian_basis(din);
  std::vector<Matrix> targets;
  for (const auto& f : f_target.elements()) targets.push_back(f.to_dense());
  const Matrix id_out = Matrix::Identity(dout, dout);

  std::vector<Constraint> out;
  for (const auto& rho : basis) {
    const RealVector want = p * f_eta.probabilities(rho);
    const Matrix rho_t = rho.transpose();
    for (std::size_t i = 0; i < targets.size(); ++i) {
      out.push_back({kron(rho_t, targets[i]), want[static_cast<Index>(i)], false});
    }
    // Tr[(E (x) I) J] = Tr[E]
    out.push_back({kron(rho, id_out), rho.trace().real(), false});
  }
  // Inputs on which G_S = sum_{i in S, j} P(i, j) F_eta_j vanishes must never
  // produce an outcome in S; inputs with Tr[G_S rho] < 0 cannot be served.
  std::vector<Matrix> g;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    Matrix gi = Matrix::Zero(din, din);
    for (std::size_t j = 0; j < f_eta.size(); ++j) {
      gi += p(static_cast<Index>(i), static_cast<Index>(j)) * f_eta.element(j).to_dense();
    }
    g.push_back(std::move(gi));
  }
  const std::size_t n = targets.size();
  std::vector<std::uint64_t> subsets;
  if (n <= kMaxSubsetOutcomes) {
    for (std::uint64_t m = 1; m < (std::uint64_t{1} << n); ++m) subsets.push_back(m);
  } else {
    const std::uint64_t all = (std::uint64_t{1} << n) - 1;
    for (std::size_t i = 0; i < n; ++i) {
      subsets.push_back(std::uint64_t{1} << i);
      subsets.push_back(all & ~(std::uint64_t{1} << i));
    }
  }
  for (const std::uint64_t m : subsets) {
    Matrix gs = Matrix::Zero(din, din);
    Matrix fs = Matrix::Zero(dout, dout);
    for (std::size_t i = 0; i < n; ++i) {
      if (m >> i & 1U) {
        gs += g[i];
        fs += targets[i];
      }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(gs));
    const RealVector& lam = es.eigenvalues();
    const double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
    for (Index k = 0; k < din && lam[k] <= 1e-12 * scale; ++k) {
      const Matrix proj = es.eigenvectors().col(k) * es.eigenvectors().col(k).adjoint();
      out.push_back({kron(proj.transpose(), fs), lam[k] < -kNegativeRhsTol ? lam[k] : 0.0, true});
    }
  }
  return out;
}

// Orthonormal basis of the smallest face found by repeatedly taking the
// common kernel of zero-valued constraints that are PSD on the current face.
Matrix face_basis(const std::vector<Constraint>& cons, Index dim) {
  Matrix face = Matrix::Identity(dim, dim);
  for (;;) {
    const Index r = face.cols();
    if (r == 0) return face;
    Matrix s = Matrix::Zero(r, r);
    for (const auto& k : cons) {
      if (k.c != 0.0) continue;
      const Matrix a = symmetrized(Matrix(face.adjoint() * k.a * face));
      if (a.cwiseAbs().maxCoeff() <= 1e-12) continue;
      if (!k.psd && min_eigenvalue(a) < -1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff())) continue;
      s += a / a.cwiseAbs().maxCoeff();
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(s);
    const RealVector& lam = es.eigenvalues();
    const double cut = 1e-10 * std::max(1.0, lam.cwiseAbs().maxCoeff());
    Index keep = 0;
    while (keep < r && lam[keep] <= cut) ++keep;  // ascending order
    if (keep == r) return face;
    face = face * es.eigenvectors().leftCols(keep);
  }
}

struct RunOutcome {
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  bool plateau = false;
  RealVector x;
};

}  // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::feasible: return "feasible-at-tol";
    case Verdict::infeasible: return "infeasible-at-tol";
    case Verdict::undetermined: return "undetermined";
  }
  return "undetermined";
}

FeasibilityResult choi_feasibility(const RealMatrix& p_dc, const POVM& f_eta, const POVM& f_target,
                                   const FeasibilityOptions& options) {
  check_dims(p_dc, f_eta, f_target);
  if (!(options.tol > 0.0) || options.max_iter < 1 || options.restarts < 1) {
    throw std::invalid_argument("choi_feasibility: need tol > 0, max_iter >= 1, restarts >= 1");
  }
  const Index din = f_eta.layout().total_dim();
  const Index dout = f_target.layout().total_dim();
  const Index dim = din * dout;

  FeasibilityResult result;
  const std::vector<Constraint> cons = constraints(p_dc, f_eta, f_target);
  for (const auto& k : cons) {
    if (k.psd && k.c < -kNegativeRhsTol) {
      result.verdict = Verdict::infeasible;
      result.negative_psd_constraint = true;
      result.residual = -k.c;
      return result;
    }
  }
  const Matrix face = face_basis(cons, dim);
  const Index fdim = face.cols();
  result.face_dim = fdim;

  RealMatrix a(static_cast<Index>(cons.size()), fdim * fdim);
  RealVector c(a.rows());
  for (std::size_t k = 0; k < cons.size(); ++k) {
    a.row(static_cast<Index>(k)) = hvec(face.adjoint() * cons[k].a * face).transpose();
    c[static_cast<Index>(k)] = cons[k].c;
  }
  // Row space of the constraints from a pivoted QR of a^T (BDCSVD loses
  // orthogonality of V on the many repeated singular values here).
  RealVector x_min_norm = RealVector::Zero(a.cols());
  RealMatrix v(a.cols(), 0);
  if (fdim > 0) {
    Eigen::ColPivHouseholderQR<RealMatrix> qr(a.transpose());
    qr.setThreshold(1e-10);
    const Index rank = qr.rank();
    v = qr.householderQ() * RealMatrix::Identity(a.cols(), rank);
    const RealMatrix av = a * v;
    x_min_norm = v * av.colPivHouseholderQr().solve(c);
  }
  const double inconsistency = (a * x_min_norm - c).cwiseAbs().maxCoeff();
  if (inconsistency > 1e-9) {
    result.verdict = Verdict::infeasible;
    result.affine_inconsistent = true;
    result.residual = inconsistency;
    return result;
  }
  // Projection onto the affine set: x - V V^T x + x_min_norm (V spans the row space).
  auto project_affine = [&](const RealVector& x) -> RealVector { return x - v * (v.transpose() * x) + x_min_norm; };

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  auto run = [&](bool record) {
    Matrix g(fdim, fdim);
    for (Index i = 0; i < fdim; ++i) {
      for (Index j = 0; j < fdim; ++j) g(i, j) = Complex(normal(rng), normal(rng));
    }
    Matrix j0 = g * g.adjoint();
    j0 *= static_cast<double>(din) / j0.trace().real();

    // Dykstra between the affine set A and the cone S. The affine correction
    // lies in the normal space of A and drops out, leaving the fixed-point map
    // u -> u + P_A(P_S(u)) - P_S(u) on u = x + p, whose step is the residual
    // x - y. Anderson mixing over the last steps accelerates it; a step that
    // blows the residual up clears the history.
    RunOutcome out;
    RealVector u = project_affine(hvec(j0));
    RealVector x = u;
    std::deque<RealVector> d_f;
    std::deque<RealVector> d_g;
    RealVector f_prev;
    RealVector g_prev;
    double best_residual = std::numeric_limits<double>::infinity();
    double window_start = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= options.max_iter; ++it) {
      const RealVector y = hvec(psd_part(hunvec(u, fdim)));
      x = project_affine(y);
      const RealVector f = x - y;
      const RealVector g_next = u + f;
      out.residual = (x - y).norm();
      out.iterations = it;
      if (record && it % 100 == 0) result.trajectory.push_back(out.residual);
      if (out.residual < options.tol) {
        out.converged = true;
        break;
      }
      if (it % kPlateauWindow == 0) {
        if (std::isfinite(window_start) && (window_start - out.residual) < kPlateauDecrease * window_start) {
          out.plateau = true;
          break;
        }
        window_start = out.residual;
      }

      if (out.residual > kAndersonReset * best_residual) {
        d_f.clear();
        d_g.clear();
      } else if (f_prev.size() > 0) {
        d_f.push_back(f - f_prev);
        d_g.push_back(g_next - g_prev);
        if (d_f.size() > kAndersonMemory) {
          d_f.pop_front();
          d_g.pop_front();
        }
      }
      best_residual = std::min(best_residual, out.residual);
      f_prev = f;
      g_prev = g_next;
      if (d_f.empty()) {
        u = g_next;
        continue;
      }
      const auto m = static_cast<Index>(d_f.size());
      RealMatrix df(f.size(), m);
      RealMatrix dg(f.size(), m);
      for (Index k = 0; k < m; ++k) {
        df.col(k) = d_f[static_cast<std::size_t>(k)];
        dg.col(k) = d_g[static_cast<std::size_t>(k)];
      }
      RealMatrix gram = df.transpose() * df;
      gram.diagonal().array() += kAndersonRegularization * gram.diagonal().maxCoeff() + 1e-300;
      const RealVector gamma = gram.ldlt().solve(df.transpose() * f);
      u = g_next - dg * gamma;
    }
    out.x = std::move(x);
    return out;
  };

  bool all_separated = true;
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < options.restarts; ++r) {
    RunOutcome o = run(r == 0);
    result.iterations += o.iterations;
    result.restart_residuals.push_back(o.residual);
    best = std::min(best, o.residual);
    if (o.converged) {
      result.verdict = Verdict::feasible;
      result.residual = o.residual;
      result.witness = face * hunvec(o.x, fdim) * face.adjoint();
      return result;
    }
    if (!(o.plateau && o.residual >= options.gap_floor)) all_separated = false;
  }
  result.residual = best;
  result.verdict = all_separated ? Verdict::infeasible : Verdict::undetermined;
  return result;
}

FeasibilityResult choi_feasibility(const StochasticMatrix& p_dc, const POVM& f_eta, const POVM& f_target,
                                   const FeasibilityOptions& options) {
  return choi_feasibility(p_dc.matrix(), f_eta, f_target, options);
}

WitnessReport verify_choi_witness(const Matrix& j, const RealMatrix& p_dc, const POVM& f_eta, const POVM& f_target,
                                  double tol) {
  check_dims(p_dc, f_eta, f_target);
  const Index din = f_eta.layout().total_dim();
  const Index dout = f_target.layout().total_dim();
  if (j.rows() != din * dout || j.cols() != din * dout) {
    throw std::invalid_argument("verify_choi_witness: J must be square of the product dimension");
  }
  WitnessReport r;
  r.hermitian_deviation = hermitian_deviation(j);
  r.min_eigenvalue = hermitian_eigenvalues(symmetrized(j), std::numeric_limits<double>::infinity()).minCoeff();
  r.trace_deviation = (partial_trace_second(j, din, dout) - Matrix::Identity(din, din)).cwiseAbs().maxCoeff();

  // Channel read off J: Phi(rho) = Tr_1[(rho^T (x) I) J].
  for (const auto& rho : hermitian_basis(din)) {
    Matrix out = Matrix::Zero(dout, dout);
    for (Index a = 0; a < din; ++a) {
      for (Index b = 0; b < din; ++b) out += rho(a, b) * j.block(a * dout, b * dout, dout, dout);
    }
    const RealVector want = p_dc * f_eta.probabilities(rho);
    const RealVector got = f_target.probabilities(out);
    r.linear_residual = std::max(r.linear_residual, (want - got).cwiseAbs().maxCoeff());
  }
  r.psd_ok = r.hermitian_deviation <= tol && r.min_eigenvalue >= -tol;
  r.trace_ok = r.trace_deviation <= tol;
  r.linear_ok = r.linear_residual <= tol;
  return r;
}

}  // namespace flagsq
