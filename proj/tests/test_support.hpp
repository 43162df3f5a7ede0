// Copyright 2026 The flagsquash Authors
// SPDX-License-Identifier: Apache-2.0

// Random fixtures shared by the unit and acceptance tests.

#pragma once

#include "flagsq/channels.hpp"
#include "flagsq/squashing.hpp"

#include <algorithm>
#include <limits>

#include <random>
#include <vector>

namespace flagsq::testing {

inline Matrix random_complex(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix g(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) g(i, j) = Complex(n(rng), n(rng));
  }
  return g;
}

inline Matrix random_hermitian(Index d, std::mt19937_64& rng) {
  const Matrix g = random_complex(d, d, rng);
  return (g + g.adjoint()) / 2.0;
}

/// Random full-rank density matrix.
inline Matrix random_density(Index d, std::mt19937_64& rng) {
  const Matrix g = random_complex(d, d, rng);
  Matrix rho = g * g.adjoint();
  return rho / rho.trace().real();
}

/// Random n-outcome POVM on dimension d: G_i^{-1/2} A_i G^{-1/2} with A_i random PSD.
inline std::vector<Matrix> random_povm(Index d, int n, std::mt19937_64& rng) {
  std::vector<Matrix> a;
  Matrix total = Matrix::Zero(d, d);
  for (int i = 0; i < n; ++i) {
    const Matrix g = random_complex(d, d, rng);
    a.push_back(g * g.adjoint());
    total += a.back();
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(total);
  const Matrix inv_sqrt = es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                          es.eigenvectors().adjoint();
  for (auto& x : a) x = inv_sqrt * x * inv_sqrt;
  return a;
}

inline RealVector random_uniform(Index k, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  RealVector v(k);
  for (Index i = 0; i < k; ++i) v[i] = u(rng);
  return v;
}

/// max |Tr[F_i Phi(rho)] - (P Tr[F rho])_i| for one state.
inline double statistics_gap(const QuantumChannel& ch, const RealMatrix& p, const POVM& before, const POVM& after,
                             const Matrix& rho) {
  const RealVector want = p * before.probabilities(rho);
  const RealVector got = after.probabilities(ch.apply(rho));
  return (want - got).cwiseAbs().maxCoeff();
}

/// Dark-count post-processing that a qubit squasher with equal rates d
/// needs, over (no-click, click 1, click 2).
inline RealMatrix bb84_p_dc(double d) {
  RealMatrix p(3, 3);
  p << (1 - d) * (1 - d), 0, 0,
       d * (1 - d / 2), 1 - d / 2, d / 2,
       d * (1 - d / 2), d / 2, 1 - d / 2;
  return p;
}

// F_noise = (1 - q0) F_ideal + q0 Q with Q a random block-diagonal POVM that
// keeps the orthonormal flags.
inline SquashedPOVM mixture(const SquashedPOVM& ideal, double q0, std::mt19937_64& rng) {
  const SpaceLayout& l = ideal.layout();
  const int n = static_cast<int>(ideal.size());
  const auto one = random_povm(l.dim(BlockLabel::photons(0)), n, rng);
  const auto two = random_povm(l.dim(BlockLabel::photons(1)), n, rng);
  std::vector<BlockOperator> elems;
  for (int i = 0; i < n; ++i) {
    BlockOperator q(l);
    q.set_block(BlockLabel::photons(0), one[static_cast<std::size_t>(i)]);
    q.set_block(BlockLabel::photons(1), two[static_cast<std::size_t>(i)]);
    q.set_block(BlockLabel::flag(), basis_projector(n, i));
    elems.push_back((1.0 - q0) * ideal.element(static_cast<std::size_t>(i)) + q0 * q);
  }
  return SquashedPOVM(l, ideal.events(), elems);
}

// Largest t with N - t D PSD, by a Schur complement on ker D and a
// generalized eigenproblem on supp D.
inline double largest_t(const Matrix& n, const Matrix& d) {
  Eigen::SelfAdjointEigenSolver<Matrix> ed(d);
  std::vector<Index> sup;
  std::vector<Index> ker;
  for (Index i = 0; i < d.rows(); ++i) (ed.eigenvalues()[i] > 1e-12 ? sup : ker).push_back(i);
  const Matrix vs = ed.eigenvectors()(Eigen::all, sup);
  const Matrix vk = ed.eigenvectors()(Eigen::all, ker);
  Matrix eff = vs.adjoint() * n * vs;
  if (!ker.empty()) {
    const Matrix b = vs.adjoint() * n * vk;
    const Matrix c = vk.adjoint() * n * vk;
    Eigen::SelfAdjointEigenSolver<Matrix> ec(c);
    RealVector inv = ec.eigenvalues();
    for (Index i = 0; i < inv.size(); ++i) inv[i] = inv[i] > 1e-12 ? 1.0 / inv[i] : 0.0;
    eff -= b * (ec.eigenvectors() * inv.asDiagonal() * ec.eigenvectors().adjoint()) * b.adjoint();
  }
  RealVector isq = ed.eigenvalues()(sup).cwiseSqrt().cwiseInverse();
  const Matrix m = isq.asDiagonal() * eff * isq.asDiagonal();
  return Eigen::SelfAdjointEigenSolver<Matrix>((m + m.adjoint()) / 2.0).eigenvalues().minCoeff();
}

inline double q_oracle(const POVM& noise, const POVM& ideal) {
  double t = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < noise.size(); ++i) {
    t = std::min(t, largest_t(noise.element(i).to_dense(), ideal.element(i).to_dense()));
  }
  return std::clamp(1.0 - t, 0.0, 1.0);
}

}  // namespace flagsq::testing
