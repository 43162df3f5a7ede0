// Copyright 2026 The flagsquash Authors
// SPDX-License-Identifier: Apache-2.0

#include "flagsq/detectors.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

namespace flagsq {
namespace {

TEST(SpaceLayout, PhotonBlockDimensions) {
  const SpaceLayout l = SpaceLayout::photon_blocks(2, 3);
  ASSERT_EQ(l.blocks().size(), 4U);
  EXPECT_EQ(l.dim(BlockLabel::photons(0)), 1);
  EXPECT_EQ(l.dim(BlockLabel::photons(1)), 2);
  EXPECT_EQ(l.dim(BlockLabel::photons(2)), 3);
  EXPECT_EQ(l.dim(BlockLabel::photons(3)), 4);
  EXPECT_EQ(l.total_dim(), 10);
  EXPECT_EQ(l.offset(BlockLabel::photons(2)), 3);
  EXPECT_EQ(fock_dimension(4, 2), 10);
}

TEST(SpaceLayout, RejectsBadBlocks) {
  EXPECT_THROW(SpaceLayout({{BlockLabel::photons(0), 2}}), std::invalid_argument);
  EXPECT_THROW(SpaceLayout({{BlockLabel::photons(1), 2}, {BlockLabel::photons(1), 2}}), std::invalid_argument);
  EXPECT_THROW(SpaceLayout({{BlockLabel::photons(1), 0}}), std::invalid_argument);
}

TEST(SpaceLayout, SquashedAppendsFlag) {
  const SpaceLayout l = SpaceLayout::squashed(2, 1, 4);
  EXPECT_EQ(l.total_dim(), 1 + 2 + 4);
  EXPECT_EQ(l.offset(BlockLabel::flag()), 3);
}

TEST(BlockOperator, DirectSumOfIdentities) {
  const BlockOperator op = direct_sum({{BlockLabel::photons(0), Matrix::Identity(1, 1)},
                                       {BlockLabel::photons(1), Matrix::Identity(2, 2)}});
  EXPECT_EQ(op.layout().total_dim(), 3);
  EXPECT_NEAR(op.trace(), 3.0, 1e-15);
  EXPECT_NEAR(min_eigenvalue(op), 1.0, 1e-15);
}

TEST(BlockOperator, DirectSumOfZeros) {
  const BlockOperator op =
      direct_sum({{BlockLabel::photons(0), Matrix::Zero(1, 1)}, {BlockLabel::photons(1), Matrix::Zero(2, 2)}});
  EXPECT_EQ(min_eigenvalue(op), 0.0);
  EXPECT_EQ(op.to_dense().cwiseAbs().maxCoeff(), 0.0);
}

TEST(BlockOperator, MinEigenvalueOfDiagonal) {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 0.2;
  d(1, 1) = 0.7;
  const BlockOperator op = direct_sum({{BlockLabel::photons(1), d}});
  EXPECT_NEAR(min_eigenvalue(op), 0.2, 1e-15);
  EXPECT_NEAR(max_eigenvalue(op), 0.7, 1e-15);
}

TEST(BlockOperator, PsdCheck) {
  EXPECT_TRUE(psd_check(BlockOperator::identity(SpaceLayout::photon_blocks(2, 2)), 1e-9));
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = -1e-6;
  EXPECT_FALSE(psd_check(direct_sum({{BlockLabel::photons(1), d}}), 1e-9));
}

TEST(BlockOperator, RejectsNonHermitianBlock) {
  BlockOperator op = BlockOperator::identity(SpaceLayout::photon_blocks(2, 1));
  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 1) = 1e-6;
  EXPECT_THROW(op.set_block(BlockLabel::photons(1), bad), NotHermitianError);
  EXPECT_THROW(op.set_block(BlockLabel::photons(1), Matrix::Identity(3, 3)), std::invalid_argument);
}

TEST(BlockOperator, PinchKeepsDiagonalBlocks) {
  std::mt19937_64 rng(3);
  const SpaceLayout l = SpaceLayout::photon_blocks(2, 2);
  const Matrix h = testing::random_hermitian(l.total_dim(), rng);
  const BlockOperator p = BlockOperator::pinch(l, h);
  for (const auto& b : l.blocks()) {
    EXPECT_LT((p.block(b.label) - extract_block(l, b.label, h)).cwiseAbs().maxCoeff(), 1e-15);
  }
  EXPECT_EQ(p.to_dense()(0, 1), Complex(0.0, 0.0));
}

// direct_sum followed by block extraction returns every block.
TEST(BlockOperatorProperty, DirectSumRoundTrip) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = testing::random_hermitian(1, rng);
    const Matrix b = testing::random_hermitian(3, rng);
    const Matrix f = testing::random_hermitian(4, rng);
    const BlockOperator op =
        direct_sum({{BlockLabel::photons(0), a}, {BlockLabel::photons(1), b}, {BlockLabel::flag(), f}});
    const Matrix dense = op.to_dense();
    EXPECT_LT((extract_block(op.layout(), BlockLabel::photons(0), dense) - a).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((extract_block(op.layout(), BlockLabel::photons(1), dense) - b).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((extract_block(op.layout(), BlockLabel::flag(), dense) - f).cwiseAbs().maxCoeff(), 1e-15);
  }
}

// min_eigenvalue(A (+) B) = min(min_eigenvalue(A), min_eigenvalue(B)).
TEST(BlockOperatorProperty, MinEigenvalueOfDirectSum) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix a = testing::random_hermitian(2, rng);
    const Matrix b = testing::random_hermitian(3, rng);
    const BlockOperator op = direct_sum({{BlockLabel::photons(1), a}, {BlockLabel::photons(2), b}});
    Eigen::SelfAdjointEigenSolver<Matrix> ea(a);
    Eigen::SelfAdjointEigenSolver<Matrix> eb(b);
    const double oracle = std::min(ea.eigenvalues().minCoeff(), eb.eigenvalues().minCoeff());
    EXPECT_NEAR(min_eigenvalue(op), oracle, 1e-12);
  }
}

// psd_check(op, t1) implies psd_check(op, t2) for t2 >= t1.
TEST(BlockOperatorProperty, PsdCheckMonotoneInTolerance) {
  std::mt19937_64 rng(13);
  const std::vector<double> tols{0.0, 1e-12, 1e-9, 1e-6, 1e-3, 1e-1, 1.0};
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix h = testing::random_hermitian(3, rng) * 1e-2 + Matrix::Identity(3, 3) * 0.01;
    const BlockOperator op = direct_sum({{BlockLabel::photons(2), h}});
    bool seen = false;
    for (double t : tols) {
      const bool ok = psd_check(op, t);
      if (seen) EXPECT_TRUE(ok);
      seen = seen || ok;
    }
  }
}

TEST(BlockOperator, PassiveMultiClickCompressionVanishes) {
  const POVM povm = build_threshold_povm(passive_bb84_setup(), 3);
  const BlockOperator multi = povm.union_element(povm.events().indices(ClickClass::multi));
  const Matrix dense = multi.to_dense();
  const Matrix proj = block_projector(povm.layout(), {BlockLabel::photons(0), BlockLabel::photons(1)});
  const Matrix compressed = proj * dense * proj;
  EXPECT_LT(compressed.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(min_eigenvalue(multi.block(BlockLabel::photons(1))), 0.0, 1e-12);
  EXPECT_GT(max_eigenvalue(multi.block(BlockLabel::photons(2))), 0.1);
}

TEST(DensityLike, ValidatesStates) {
  const SpaceLayout l = SpaceLayout::photon_blocks(2, 1);
  EXPECT_NO_THROW(DensityLike::from_dense(l, Matrix::Identity(3, 3) / 3.0));
  EXPECT_THROW(DensityLike::from_dense(l, Matrix::Identity(3, 3)), std::invalid_argument);
  Matrix neg = Matrix::Zero(3, 3);
  neg(0, 0) = 1.5;
  neg(1, 1) = -0.5;
  EXPECT_THROW(DensityLike::from_dense(l, neg), std::invalid_argument);
  EXPECT_NEAR(vacuum_state(l).matrix()(0, 0).real(), 1.0, 0.0);
}

}  // namespace
}  // namespace flagsq
