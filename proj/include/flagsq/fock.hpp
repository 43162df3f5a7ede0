// Copyright 2026 The flagsquash Authors
// SPDX-License-Identifier: Apache-2.0

// fock.hpp: Photon-number block layouts, block-diagonal Hermitian operators,
// and the eigenvalue utilities every other module builds on.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <compare>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace flagsq {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kHermitianTol = 1e-12;

/// Raised when an operator that must be Hermitian is not, beyond kHermitianTol.
class NotHermitianError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// --------------------------- Scalar-generic matrix helpers -------------------

/// Largest entry of |A - A^dagger|.
template <typename Derived>
typename Eigen::NumTraits<typename Derived::Scalar>::Real hermitian_deviation(
    const Eigen::MatrixBase<Derived>& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("hermitian_deviation: matrix must be square");
  if (a.size() == 0) return 0;
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

template <typename Derived>
typename Derived::PlainObject symmetrized(const Eigen::MatrixBase<Derived>& a) {
  return (a + a.adjoint()) / typename Derived::Scalar(2);
}

/// Ascending eigenvalues of a Hermitian matrix. Symmetrizes first; throws
/// NotHermitianError when the input is Hermitian only beyond `tol`.
template <typename Derived>
Eigen::Matrix<typename Eigen::NumTraits<typename Derived::Scalar>::Real, Eigen::Dynamic, 1>
hermitian_eigenvalues(const Eigen::MatrixBase<Derived>& a, double tol = kHermitianTol) {
  using Plain = typename Derived::PlainObject;
  if (hermitian_deviation(a) > tol) {
    throw NotHermitianError("hermitian_eigenvalues: operator is not Hermitian");
  }
  if (a.size() == 0) return {};
  Eigen::SelfAdjointEigenSolver<Plain> solver(symmetrized(a), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw std::runtime_error("hermitian_eigenvalues: eigensolver failed");
  return solver.eigenvalues();
}

template <typename Derived>
double min_eigenvalue(const Eigen::MatrixBase<Derived>& a, double tol = kHermitianTol) {
  if (a.size() == 0) throw std::invalid_argument("min_eigenvalue: empty matrix");
  return static_cast<double>(hermitian_eigenvalues(a, tol).minCoeff());
}

template <typename Derived>
double max_eigenvalue(const Eigen::MatrixBase<Derived>& a, double tol = kHermitianTol) {
  if (a.size() == 0) throw std::invalid_argument("max_eigenvalue: empty matrix");
  return static_cast<double>(hermitian_eigenvalues(a, tol).maxCoeff());
}

/// Spectral norm of a Hermitian matrix.
template <typename Derived>
double hermitian_norm(const Eigen::MatrixBase<Derived>& a, double tol = kHermitianTol) {
  auto ev = hermitian_eigenvalues(a, tol);
  return ev.size() == 0 ? 0.0 : static_cast<double>(ev.cwiseAbs().maxCoeff());
}

/// Number of Fock states carrying `photons` photons spread over `modes` modes.
Index fock_dimension(int modes, int photons);

// --------------------------- Layouts -----------------------------------------

/// Label of one block of a SpaceLayout: a total photon number m >= 0 or the
/// flag space.
class BlockLabel {
 public:
  static constexpr BlockLabel photons(int m) { return BlockLabel(m); }
  static constexpr BlockLabel flag() { return BlockLabel(-1); }

  constexpr bool is_flag() const { return value_ < 0; }
  int photon_number() const {
    if (is_flag()) throw std::logic_error("BlockLabel: flag block has no photon number");
    return value_;
  }
  std::string str() const { return is_flag() ? "flag" : "m=" + std::to_string(value_); }

  auto operator<=>(const BlockLabel&) const = default;

 private:
  constexpr explicit BlockLabel(int v) : value_(v) {}
  int value_ = 0;
};

struct LayoutBlock {
  BlockLabel label;
  Index dim = 0;
  bool operator==(const LayoutBlock&) const = default;
};

/// Ordered direct-sum decomposition of a finite Hilbert space.
/// Invariants: labels unique, dims >= 1, the m=0 block (if present) has dim 1.
class SpaceLayout {
 public:
  SpaceLayout() = default;
  explicit SpaceLayout(std::vector<LayoutBlock> blocks);

  /// Blocks m = 0..cutoff for `modes` input modes.
  static SpaceLayout photon_blocks(int modes, int cutoff);
  /// Blocks m = 0..cutoff followed by a flag block of dimension `flag_dim`.
  static SpaceLayout squashed(int modes, int cutoff, Index flag_dim);

  const std::vector<LayoutBlock>& blocks() const { return blocks_; }
  Index total_dim() const { return total_dim_; }
  bool contains(BlockLabel label) const;
  Index dim(BlockLabel label) const;
  Index offset(BlockLabel label) const;
  std::vector<BlockLabel> labels() const;

  bool operator==(const SpaceLayout& other) const { return blocks_ == other.blocks_; }

 private:
  std::size_t position(BlockLabel label) const;

  std::vector<LayoutBlock> blocks_;
  std::vector<Index> offsets_;
  Index total_dim_ = 0;
};

// --------------------------- Operators ---------------------------------------

/// Hermitian operator that is block-diagonal with respect to a SpaceLayout.
/// Absent blocks are implicit zeros.
class BlockOperator {
 public:
  BlockOperator() = default;
  explicit BlockOperator(SpaceLayout layout) : layout_(std::move(layout)) {}

  static BlockOperator identity(const SpaceLayout& layout);

  /// Keeps only the diagonal blocks of a dense operator on `layout`.
  static BlockOperator pinch(const SpaceLayout& layout, const Matrix& dense);

  const SpaceLayout& layout() const { return layout_; }

  bool has_block(BlockLabel label) const { return blocks_.contains(label); }
  /// Stored block, or a zero matrix of the right size when absent.
  Matrix block(BlockLabel label) const;
  /// Stores a (symmetrized) copy. Throws on size mismatch or non-Hermitian input.
  void set_block(BlockLabel label, const Matrix& value);
  void erase_block(BlockLabel label) { blocks_.erase(label); }
  const std::map<BlockLabel, Matrix>& stored_blocks() const { return blocks_; }

  Matrix to_dense() const;
  double trace() const;

  BlockOperator& operator+=(const BlockOperator& other);
  BlockOperator& operator-=(const BlockOperator& other);
  BlockOperator& operator*=(double s);

 private:
  SpaceLayout layout_;
  std::map<BlockLabel, Matrix> blocks_;
};

BlockOperator operator+(BlockOperator a, const BlockOperator& b);
BlockOperator operator-(BlockOperator a, const BlockOperator& b);
BlockOperator operator*(double s, BlockOperator a);
BlockOperator operator*(BlockOperator a, double s);

/// Builds the direct sum of labelled square blocks in the order given.
BlockOperator direct_sum(const std::vector<std::pair<BlockLabel, Matrix>>& parts);

/// Smallest eigenvalue over all blocks; absent blocks contribute 0.
double min_eigenvalue(const BlockOperator& op);
double max_eigenvalue(const BlockOperator& op);

/// min_eigenvalue(op) >= -tol.
bool psd_check(const BlockOperator& op, double tol);

/// Max entry deviation between two operators on the same layout.
double max_abs_difference(const BlockOperator& a, const BlockOperator& b);

/// Orthogonal projector (dense) onto the union of the given blocks.
Matrix block_projector(const SpaceLayout& layout, const std::vector<BlockLabel>& labels);

/// Dense operator with `value` placed on the diagonal block `label`.
Matrix embed_block(const SpaceLayout& layout, BlockLabel label, const Matrix& value);

/// Diagonal block `label` of a dense operator.
Matrix extract_block(const SpaceLayout& layout, BlockLabel label, const Matrix& dense);

/// |i><i| in dimension n.
Matrix basis_projector(Index n, Index i);

// --------------------------- States ------------------------------------------

inline constexpr double kStateTol = 1e-10;

/// Density matrix on a layout, not necessarily block-diagonal.
/// Invariants: Hermitian, trace within 1e-10 of 1, min eigenvalue >= -1e-10.
class DensityLike {
 public:
  static DensityLike from_dense(SpaceLayout layout, const Matrix& rho);
  static DensityLike from_blocks(const BlockOperator& op);

  const SpaceLayout& layout() const { return layout_; }
  const Matrix& matrix() const { return rho_; }

 private:
  DensityLike(SpaceLayout layout, Matrix rho) : layout_(std::move(layout)), rho_(std::move(rho)) {}

  SpaceLayout layout_;
  Matrix rho_;
};

/// Vacuum |vac><vac| on a layout that has an m=0 block.
DensityLike vacuum_state(const SpaceLayout& layout);

/// Flag state |i><i| on a layout that has a flag block.
DensityLike flag_state(const SpaceLayout& layout, Index i);

}  // namespace flagsq
