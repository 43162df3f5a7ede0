// Copyright 2026 The flagsquash Authors
// SPDX-License-Identifier: Apache-2.0

#include "flagsq/feasibility.hpp"
#include "flagsq/squashing.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

namespace flagsq {
namespace {

using testing::bb84_p_dc;

// Phi(rho)_{yx} = sum_{ab} rho_{ba} J_{(b,y),(a,x)} for J over input (x) output.
Matrix apply_choi(const Matrix& j, const Matrix& rho, Index dout) {
  const Index din = rho.rows();
  Matrix out = Matrix::Zero(dout, dout);
  for (Index a = 0; a < din; ++a) {
    for (Index b = 0; b < din; ++b) out += rho(b, a) * j.block(b * dout, a * dout, dout, dout);
  }
  return out;
}

// Checks a witness without going through the library's constraint builder.
void expect_witness(const Matrix& j, const RealMatrix& p, const POVM& before, const POVM& after, double tol) {
  const Index din = before.layout().total_dim();
  const Index dout = after.layout().total_dim();
  ASSERT_EQ(j.rows(), din * dout);
  EXPECT_LT((j - j.adjoint()).cwiseAbs().maxCoeff(), tol);
  const Matrix h = (j + j.adjoint()) / 2.0;
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<Matrix>(h).eigenvalues().minCoeff(), -tol);
  std::mt19937_64 rng(61);
  for (int s = 0; s < 30; ++s) {
    const Matrix rho = testing::random_density(din, rng);
    const Matrix out = apply_choi(h, rho, dout);
    EXPECT_NEAR(out.trace().real(), 1.0, tol);
    const RealVector want = p * before.probabilities(rho);
    for (std::size_t i = 0; i < after.size(); ++i) {
      const double got = (after.element(i).to_dense() * out).trace().real();
      EXPECT_NEAR(got, want[static_cast<Index>(i)], tol);
    }
  }
}

TEST(Feasibility, QubitBB84Feasible) {
  for (double d : {0.01, 0.05, 0.1}) {
    const POVM f = qubit_target_povm("Z");
    const FeasibilityResult r = choi_feasibility(bb84_p_dc(d), f, f);
    ASSERT_EQ(r.verdict, Verdict::feasible) << d;
    EXPECT_LE(r.iterations, 10000);
    ASSERT_TRUE(r.witness.has_value());
    EXPECT_TRUE(verify_choi_witness(*r.witness, bb84_p_dc(d), f, f, 1e-6).pass());
    expect_witness(*r.witness, bb84_p_dc(d), f, f, 1e-6);
  }
}

TEST(Feasibility, IdentityPostprocessing) {
  const POVM f = qubit_target_povm("X");
  const FeasibilityResult r = choi_feasibility(RealMatrix::Identity(3, 3), f, f);
  ASSERT_EQ(r.verdict, Verdict::feasible);
  expect_witness(*r.witness, RealMatrix::Identity(3, 3), f, f, 1e-6);
}

TEST(Feasibility, ActiveFlagMode) {
  RealVector eta(2);
  eta << 0.7, 0.75;
  RealVector d(2);
  d << 0.01, 0.02;
  const SquashedPOVM f = flag_state_target(build_threshold_povm(active_bb84_setup("Z").with_efficiencies(eta), 1), 1);
  const StochasticMatrix p = dark_count_matrix(d);
  const FeasibilityResult r = choi_feasibility(p, f, f);
  ASSERT_EQ(r.verdict, Verdict::feasible);
  EXPECT_LT(r.face_dim, 49);
  expect_witness(*r.witness, p.matrix(), f, f, 1e-6);
}

TEST(Feasibility, NegativeEntryNeverFeasible) {
  const POVM f = qubit_target_povm("Z");
  RealMatrix p = bb84_p_dc(0.05);
  p(1, 1) += 0.1;
  p(0, 1) -= 0.1;
  for (std::uint64_t seed : {1U, 2U, 3U}) {
    FeasibilityOptions opt;
    opt.seed = seed;
    const FeasibilityResult r = choi_feasibility(p, f, f, opt);
    EXPECT_NE(r.verdict, Verdict::feasible) << seed;
    EXPECT_FALSE(r.witness.has_value());
  }
}

// A sharp measurement cannot be reproduced by an unsharp one: the target
// would need its elements to contain projectors.
TEST(Feasibility, UnsharpTargetNeverFeasible) {
  const SpaceLayout l({{BlockLabel::photons(1), 2}});
  auto op = [&](double a, double b) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return direct_sum({{BlockLabel::photons(1), m}});
  };
  const POVM sharp(l, enumerate_events(1), {op(1, 0), op(0, 1)});
  const POVM unsharp(l, enumerate_events(1), {op(0.75, 0.25), op(0.25, 0.75)});
  for (std::uint64_t seed : {1U, 2U, 3U}) {
    FeasibilityOptions opt;
    opt.seed = seed;
    const FeasibilityResult r = choi_feasibility(RealMatrix::Identity(2, 2), sharp, unsharp, opt);
    EXPECT_NE(r.verdict, Verdict::feasible) << seed;
    EXPECT_EQ(r.verdict, Verdict::infeasible) << seed;
  }
  // Both unsharp, nothing pinned: separation has to come from the iteration.
  const POVM softer(l, enumerate_events(1), {op(0.6, 0.4), op(0.4, 0.6)});
  for (std::uint64_t seed : {1U, 2U, 3U}) {
    FeasibilityOptions opt;
    opt.seed = seed;
    const FeasibilityResult r = choi_feasibility(RealMatrix::Identity(2, 2), unsharp, softer, opt);
    EXPECT_EQ(r.face_dim, 4);
    EXPECT_NE(r.verdict, Verdict::feasible) << seed;
  }
  // The converse direction is a valid noise channel.
  const FeasibilityResult ok = choi_feasibility(RealMatrix::Identity(2, 2), unsharp, sharp);
  ASSERT_EQ(ok.verdict, Verdict::feasible);
  expect_witness(*ok.witness, RealMatrix::Identity(2, 2), unsharp, sharp, 1e-6);
}

TEST(Feasibility, Deterministic) {
  const POVM f = qubit_target_povm("Z");
  FeasibilityOptions opt;
  opt.seed = 9;
  const FeasibilityResult a = choi_feasibility(bb84_p_dc(0.05), f, f, opt);
  const FeasibilityResult b = choi_feasibility(bb84_p_dc(0.05), f, f, opt);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.trajectory, b.trajectory);
  EXPECT_EQ(a.restart_residuals, b.restart_residuals);
  ASSERT_TRUE(a.witness && b.witness);
  EXPECT_EQ((*a.witness - *b.witness).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Feasibility, RejectsShapeMismatch) {
  const POVM f = qubit_target_povm("Z");
  EXPECT_THROW(choi_feasibility(RealMatrix::Identity(2, 2), f, f), std::invalid_argument);
}

TEST(WitnessCheck, RejectsNonWitness) {
  const POVM f = qubit_target_povm("Z");
  const Matrix zero = Matrix::Zero(9, 9);
  const WitnessReport w = verify_choi_witness(zero, bb84_p_dc(0.05), f, f, 1e-6);
  EXPECT_FALSE(w.pass());
  EXPECT_FALSE(w.trace_ok);
}

}  // namespace
}  // namespace flagsq
