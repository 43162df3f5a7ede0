// Copyright 2026 The flagsquash Authors
// SPDX-License-Identifier: Apache-2.0

#include "flagsq/channels.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

namespace flagsq {
namespace {

using testing::bb84_p_dc;
using testing::mixture;
using testing::q_oracle;
using testing::random_density;
using testing::statistics_gap;

const std::vector<BlockLabel> kLow{BlockLabel::photons(0), BlockLabel::photons(1)};

Matrix pinch(const SpaceLayout& l, const Matrix& rho) { return BlockOperator::pinch(l, rho).to_dense(); }

SquashedPOVM flag_povm(const DetectionSetup& s, const RealVector& eta) {
  return flag_state_target(build_threshold_povm(s.with_efficiencies(eta), 1), 1);
}

TEST(BB84Channel, ZeroDarkCountIsPinch) {
  const QuantumChannel ch = bb84_simple_noise_channel(0.0);
  std::mt19937_64 rng(51);
  const Matrix rho = random_density(3, rng);
  EXPECT_LT((ch.apply(rho) - pinch(ch.input_layout(), rho)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(BB84Channel, VacuumNoClick) {
  const QuantumChannel ch = bb84_simple_noise_channel(0.05);
  const POVM f = qubit_target_povm("Z");
  const RealVector p = f.probabilities(ch.apply(vacuum_state(ch.input_layout()).matrix()));
  EXPECT_NEAR(p[0], 0.9025, 1e-15);
}

TEST(BB84Channel, StatisticsOnOperatorBasis) {
  for (double d : {0.0, 0.01, 0.05, 0.1}) {
    const QuantumChannel ch = bb84_simple_noise_channel(d);
    EXPECT_TRUE(verify_cptp(ch, 1e-9).pass);
    for (const char* basis : {"Z", "X"}) {
      const POVM f = qubit_target_povm(basis);
      for (const auto& x : hermitian_basis(3)) EXPECT_LT(statistics_gap(ch, bb84_p_dc(d), f, f, x), 1e-12);
    }
  }
}

class DarkCountChannelTest : public ::testing::TestWithParam<int> {};

TEST_P(DarkCountChannelTest, Identities) {
  std::mt19937_64 rng(static_cast<std::uint64_t>(GetParam()));
  const DetectionSetup setup = GetParam() % 2 ? passive_bb84_setup() : active_bb84_setup("X");
  const Index k = setup.detectors();
  const RealVector eta = testing::random_uniform(k, 0.3, 1.0, rng);
  const RealVector d = testing::random_uniform(k, 0.0, 0.1, rng);
  const SquashedPOVM f = flag_povm(setup, eta);
  const StochasticMatrix p = dark_count_matrix(d);
  const double p00 = no_dark_count_probability(d);
  const QuantumChannel ch = dark_count_channel(p, f);
  const SpaceLayout& l = ch.input_layout();

  EXPECT_TRUE(verify_cptp(ch, 1e-9).pass);
  EXPECT_TRUE(verify_statistics_equivalence(p, f, f, ch, 1e-9).pass);

  // Phi(|vac><vac|) = P00 |vac><vac| + sum_{i != 0} P[i|0] |i><i|.
  Matrix want = p00 * embed_block(l, BlockLabel::photons(0), Matrix::Identity(1, 1));
  for (Index i = 1; i < p.rows(); ++i) want += p(i, 0) * embed_block(l, BlockLabel::flag(), basis_projector(p.rows(), i));
  EXPECT_LT((ch.apply(vacuum_state(l).matrix()) - want).cwiseAbs().maxCoeff(), 1e-14);

  for (int s = 0; s < 20; ++s) {
    const Matrix rho = random_density(l.total_dim(), rng);
    const Matrix out = ch.apply(rho);
    EXPECT_NEAR(out.trace().real(), 1.0, 1e-12);
    EXPECT_NEAR(block_weight(l, out, kLow), p00 * block_weight(l, rho, kLow), 1e-12);
    EXPECT_LT(statistics_gap(ch, p.matrix(), f, f, rho), 1e-12);
  }
  // Single-photon inputs keep unit trace through the tau_C branch.
  for (int s = 0; s < 10; ++s) {
    const Matrix one = random_density(l.dim(BlockLabel::photons(1)), rng);
    EXPECT_NEAR(ch.apply(embed_block(l, BlockLabel::photons(1), one)).trace().real(), 1.0, 1e-12);
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, DarkCountChannelTest, ::testing::Range(1, 7));

TEST(DarkCountChannel, RejectsInvalidPostprocessing) {
  const SquashedPOVM f = flag_povm(active_bb84_setup("Z"), RealVector::Constant(2, 0.8));
  RealMatrix m = RealMatrix::Identity(4, 4);
  m(1, 2) = 0.1;
  m(2, 2) = 0.9;
  EXPECT_THROW(dark_count_channel(StochasticMatrix(m), f), std::invalid_argument);
  const SquashedPOVM f2 = flag_state_target(build_threshold_povm(active_bb84_setup("Z"), 2), 2);
  EXPECT_THROW(dark_count_channel(dark_count_matrix(RealVector::Zero(2)), f2), std::invalid_argument);
}

TEST(LossChannel, EqualEfficienciesIsPinch) {
  const SquashedPOVM lossless = flag_povm(passive_bb84_setup(), RealVector::Ones(4));
  const QuantumChannel ch = loss_channel(RealVector::Constant(4, 0.7), 0.7, lossless);
  std::mt19937_64 rng(52);
  const Matrix rho = random_density(ch.input_layout().total_dim(), rng);
  EXPECT_LT((ch.apply(rho) - pinch(ch.input_layout(), rho)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(LossChannel, Identities) {
  std::mt19937_64 rng(53);
  RealVector eta(4);
  eta << 0.5, 0.55, 0.6, 0.52;
  const DetectionSetup setup = passive_bb84_setup();
  const SquashedPOVM lossless = flag_povm(setup, RealVector::Ones(4));
  const SquashedPOVM f_eta = flag_povm(setup, eta);
  const Interval range = eta_star_range(eta.minCoeff(), eta.maxCoeff());
  for (double eta_star : {range.lo, 0.8, range.hi}) {
    const QuantumChannel ch = loss_channel(eta, eta_star, lossless);
    const SquashedPOVM f_star = flag_povm(setup, RealVector::Constant(4, eta_star));
    const RealMatrix id = RealMatrix::Identity(16, 16);
    EXPECT_TRUE(verify_cptp(ch, 1e-9).pass) << eta_star;
    EXPECT_TRUE(verify_statistics_equivalence(id, f_eta, f_star, ch, 1e-9).pass) << eta_star;
    const double ratio = eta.minCoeff() / eta_star;
    const SpaceLayout& l = ch.input_layout();
    for (int s = 0; s < 20; ++s) {
      const Matrix rho = random_density(l.total_dim(), rng);
      const double want = block_weight(l, rho, {BlockLabel::photons(0)}) + ratio * block_weight(l, rho, {BlockLabel::photons(1)});
      EXPECT_NEAR(block_weight(l, ch.apply(rho), kLow), want, 1e-12);
    }
  }
  EXPECT_THROW(loss_channel(eta, 0.5, lossless), std::invalid_argument);
}

TEST(LossRemainder, Stochastic) {
  RealVector eta(2);
  eta << 0.6, 0.8;
  const StochasticMatrix q = loss_remainder_matrix(eta, 0.9, enumerate_events(2));
  EXPECT_LT((q.matrix().colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
  EXPECT_NEAR(q(2, 2), 0.9 * (0.8 - 0.6) / (0.9 - 0.6), 1e-15);
  EXPECT_NEAR(q(1, 1), 0.0, 1e-15);
}

TEST(Composition, DarkCountThenLoss) {
  std::mt19937_64 rng(54);
  RealVector eta(2);
  eta << 0.7, 0.75;
  RealVector d(2);
  d << 0.02, 0.01;
  const DetectionSetup setup = active_bb84_setup("Z");
  const SquashedPOVM f_eta = flag_povm(setup, eta);
  const SquashedPOVM f_star = flag_povm(setup, RealVector::Constant(2, 0.8));
  const SquashedPOVM lossless = flag_povm(setup, RealVector::Ones(2));
  const StochasticMatrix p = dark_count_matrix(d);
  const QuantumChannel phi = compose(loss_channel(eta, 0.8, lossless), dark_count_channel(p, f_eta));
  EXPECT_EQ(phi.stage_count(), 2U);
  EXPECT_TRUE(verify_cptp(phi, 1e-9).pass);
  EXPECT_TRUE(verify_statistics_equivalence(p, f_eta, f_star, phi, 1e-9).pass);
  const double factor = no_dark_count_probability(d);
  const SpaceLayout& l = phi.input_layout();
  for (int s = 0; s < 20; ++s) {
    const Matrix rho = random_density(l.total_dim(), rng);
    const double want = factor * (block_weight(l, rho, {BlockLabel::photons(0)}) +
                                  (0.7 / 0.8) * block_weight(l, rho, {BlockLabel::photons(1)}));
    EXPECT_NEAR(block_weight(l, phi.apply(rho), kLow), want, 1e-12);
  }
}

TEST(Deviation, Trivial) {
  const SquashedPOVM f = flag_povm(active_bb84_setup("Z"), RealVector::Constant(2, 0.8));
  EXPECT_EQ(min_deviation_q(f, f).q, 0.0);
  const SpaceLayout l({{BlockLabel::photons(1), 2}});
  const POVM trivial(l, enumerate_events(1), {BlockOperator::identity(l), BlockOperator(l)});
  EXPECT_EQ(min_deviation_q(trivial, trivial).q, 0.0);
}

TEST(DeviationProperty, MatchesEigenvalueOracle) {
  std::mt19937_64 rng(55);
  const SquashedPOVM ideal = flag_povm(passive_bb84_setup(), RealVector::Constant(4, 0.6));
  for (double q0 : {0.1, 0.3, 0.7}) {
    for (int trial = 0; trial < 3; ++trial) {
      const SquashedPOVM noise = mixture(ideal, q0, rng);
      const DeviationResult r = min_deviation_q(noise, ideal);
      ASSERT_TRUE(r.attained);
      EXPECT_LE(r.q, q0 + 1e-9);
      EXPECT_NEAR(r.q, q_oracle(noise, ideal), 1e-7);
    }
  }
}

TEST(GenericChannel, ZeroDeviationIsPinch) {
  const SquashedPOVM f = flag_povm(active_bb84_setup("X"), RealVector::Constant(2, 0.9));
  const QuantumChannel ch = generic_channel(f, f, 0.0);
  std::mt19937_64 rng(56);
  const Matrix rho = random_density(ch.input_layout().total_dim(), rng);
  const Matrix want = BlockOperator::pinch(SpaceLayout({{BlockLabel::photons(0), 1}, {BlockLabel::photons(1), 2}, {BlockLabel::flag(), 4}}), rho).to_dense();
  // Coherences between m = 0 and m = 1 survive; only the flag is pinched off.
  const Matrix out = ch.apply(rho);
  EXPECT_LT((out.topLeftCorner(3, 3) - rho.topLeftCorner(3, 3)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((out.bottomRightCorner(4, 4) - want.bottomRightCorner(4, 4)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(out.topRightCorner(3, 4).cwiseAbs().maxCoeff(), 0.0);
}

TEST(GenericChannel, MixtureIdentities) {
  std::mt19937_64 rng(57);
  const SquashedPOVM ideal = flag_povm(passive_bb84_setup(), RealVector::Constant(4, 0.55));
  const RealMatrix id = RealMatrix::Identity(16, 16);
  for (double q0 : {0.1, 0.3, 0.7}) {
    const SquashedPOVM noise = mixture(ideal, q0, rng);
    for (double q : {q0, min_deviation_q(noise, ideal).q}) {
      const QuantumChannel ch = generic_channel(noise, ideal, q);
      EXPECT_TRUE(verify_statistics_equivalence(id, noise, ideal, ch, 1e-9).pass);
      const SpaceLayout& l = ch.input_layout();
      for (int s = 0; s < 10; ++s) {
        const Matrix rho = random_density(l.total_dim(), rng);
        EXPECT_NEAR(block_weight(l, ch.apply(rho), kLow), (1.0 - q) * block_weight(l, rho, kLow), 1e-12);
      }
    }
    EXPECT_TRUE(verify_cptp(generic_channel(noise, ideal, q0), 1e-9).pass);
  }
}

TEST(GenericChannel, RejectsTooSmallDeviation) {
  std::mt19937_64 rng(58);
  const SquashedPOVM ideal = flag_povm(active_bb84_setup("Z"), RealVector::Constant(2, 0.8));
  const SquashedPOVM noise = mixture(ideal, 0.5, rng);
  EXPECT_THROW(generic_channel(noise, ideal, 0.01), std::invalid_argument);
}

TEST(InfNormMixing, Examples) {
  const SquashedPOVM f = flag_povm(active_bb84_setup("Z"), RealVector::Constant(2, 0.8));
  const POVM same = inf_norm_mixing(f, 0.0);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_LT(max_abs_difference(same.element(i), f.element(i)), 1e-15);

  const SpaceLayout l({{BlockLabel::photons(1), 2}});
  BlockOperator a(l);
  a.set_block(BlockLabel::photons(1), basis_projector(2, 0));
  const POVM two(l, enumerate_events(1), {a, BlockOperator::identity(l) - a});
  const POVM mixed = inf_norm_mixing(two, 0.1);
  const Matrix want = basis_projector(2, 0) / 1.2 + Matrix::Identity(2, 2) * (0.1 / 1.2);
  EXPECT_LT((mixed.element(0).block(BlockLabel::photons(1)) - want).cwiseAbs().maxCoeff(), 1e-15);
}

// Perturbations with operator norm <= delta stay dominated after mixing.
TEST(InfNormMixingProperty, DominatesIdeal) {
  std::mt19937_64 rng(59);
  const SpaceLayout l({{BlockLabel::photons(1), 3}});
  const int k = 4;
  const double delta = 0.05;
  for (int trial = 0; trial < 20; ++trial) {
    const auto base = testing::random_povm(3, k, rng);
    std::vector<Matrix> pert;
    Matrix mean = Matrix::Zero(3, 3);
    for (int i = 0; i < k; ++i) {
      pert.push_back(testing::random_hermitian(3, rng));
      mean += pert.back() / static_cast<double>(k);
    }
    double worst = 0.0;
    for (auto& e : pert) {
      e -= mean;
      worst = std::max(worst, Eigen::SelfAdjointEigenSolver<Matrix>(e).eigenvalues().cwiseAbs().maxCoeff());
    }
    std::vector<BlockOperator> ideal;
    std::vector<BlockOperator> noise;
    for (int i = 0; i < k; ++i) {
      const Matrix fi = 0.5 * base[static_cast<std::size_t>(i)] + Matrix::Identity(3, 3) * (0.5 / k);
      ideal.push_back(direct_sum({{BlockLabel::photons(1), fi}}));
      noise.push_back(direct_sum({{BlockLabel::photons(1), fi + pert[static_cast<std::size_t>(i)] * (delta / worst)}}));
    }
    const POVM noisy(l, enumerate_events(2), noise);
    const POVM mixed = inf_norm_mixing(noisy, delta);
    for (int i = 0; i < k; ++i) {
      const auto s = static_cast<std::size_t>(i);
      EXPECT_TRUE(psd_check(mixed.element(s) - (1.0 / (1.0 + k * delta)) * ideal[s], 1e-12));
    }
  }
}

TEST(Cptp, DetectsTraceLoss) {
  const SpaceLayout l = SpaceLayout::photon_blocks(2, 1);
  const QuantumChannel half(l, l, {BlockCopy{l.labels(), 0.5}});
  const CptpReport r = verify_cptp(half, 1e-9);
  EXPECT_FALSE(r.pass);
  EXPECT_NEAR(r.trace_deviation, 0.5, 1e-15);
}

TEST(Cptp, DetectsNonPositivity) {
  const SpaceLayout l = SpaceLayout::photon_blocks(2, 1);
  Matrix e0 = basis_projector(3, 0);
  Matrix bad = Matrix::Zero(3, 3);
  bad(1, 1) = 1.5;
  bad(2, 2) = -0.5;
  const QuantumChannel ch(l, l,
                          {MeasurePrepare{{e0, Matrix::Identity(3, 3) - e0}, {bad, basis_projector(3, 0)}, 1.0}});
  const CptpReport r = verify_cptp(ch, 1e-9);
  EXPECT_FALSE(r.pass);
  EXPECT_NEAR(r.min_eigenvalue, -0.5, 1e-12);
}

TEST(Channel, ApplyChannelOnDensity) {
  const QuantumChannel ch = bb84_simple_noise_channel(0.1);
  const DensityLike out = apply_channel(ch, vacuum_state(ch.input_layout()));
  EXPECT_NEAR(out.matrix().trace().real(), 1.0, 1e-15);
  EXPECT_NEAR(out.matrix()(0, 0).real(), 0.81, 1e-15);
}

TEST(Channel, HermitianBasisSpans) {
  const auto basis = hermitian_basis(3);
  ASSERT_EQ(basis.size(), 9U);
  RealMatrix coords(9, 9);
  for (std::size_t i = 0; i < 9; ++i) {
    for (Index a = 0; a < 3; ++a) {
      for (Index b = 0; b < 3; ++b) {
        coords(static_cast<Index>(i), a * 3 + b) = a <= b ? basis[i](a, b).real() : basis[i](a, b).imag();
      }
    }
  }
  EXPECT_EQ(Eigen::FullPivLU<RealMatrix>(coords).rank(), 9);
}

}  // namespace
}  // namespace flagsq
