// Copyright 2026 The flagsquash Authors
// SPDX-License-Identifier: Apache-2.0

#include "flagsq/fock.hpp"

#include <cmath>
#include <limits>
#include <set>

namespace flagsq {

Index fock_dimension(int modes, int photons) {
  if (modes < 1 || photons < 0) throw std::invalid_argument("fock_dimension: need modes >= 1, photons >= 0");
  // C(photons + modes - 1, photons)
  Index result = 1;
  for (int i = 1; i <= photons; ++i) {
    result = result * (modes - 1 + i) / i;
  }
  return result;
}

SpaceLayout::SpaceLayout(std::vector<LayoutBlock> blocks) : blocks_(std::move(blocks)) {
  std::set<BlockLabel> seen;
  offsets_.reserve(blocks_.size());
  for (const auto& b : blocks_) {
    if (b.dim < 1) throw std::invalid_argument("SpaceLayout: block " + b.label.str() + " has dimension < 1");
    if (!seen.insert(b.label).second) throw std::invalid_argument("SpaceLayout: duplicate block " + b.label.str());
    if (b.label == BlockLabel::photons(0) && b.dim != 1) {
      throw std::invalid_argument("SpaceLayout: vacuum block must have dimension 1");
    }
    offsets_.push_back(total_dim_);
    total_dim_ += b.dim;
  }
}

SpaceLayout SpaceLayout::photon_blocks(int modes, int cutoff) {
  if (cutoff < 0) throw std::invalid_argument("SpaceLayout::photon_blocks: negative cutoff");
  std::vector<LayoutBlock> blocks;
  for (int m = 0; m <= cutoff; ++m) blocks.push_back({BlockLabel::photons(m), fock_dimension(modes, m)});
  return SpaceLayout(std::move(blocks));
}

SpaceLayout SpaceLayout::squashed(int modes, int cutoff, Index flag_dim) {
  auto blocks = photon_blocks(modes, cutoff).blocks();
  blocks.push_back({BlockLabel::flag(), flag_dim});
  return SpaceLayout(std::move(blocks));
}

std::size_t SpaceLayout::position(BlockLabel label) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i].label == label) return i;
  }
  throw std::out_of_range("SpaceLayout: no block " + label.str());
}

bool SpaceLayout::contains(BlockLabel label) const {
  return std::any_of(blocks_.begin(), blocks_.end(), [&](const LayoutBlock& b) { return b.label == label; });
}

Index SpaceLayout::dim(BlockLabel label) const { return blocks_[position(label)].dim; }

Index SpaceLayout::offset(BlockLabel label) const { return offsets_[position(label)]; }

std::vector<BlockLabel> SpaceLayout::labels() const {
  std::vector<BlockLabel> out;
  for (const auto& b : blocks_) out.push_back(b.label);
  return out;
}

// --------------------------- BlockOperator -----------------------------------

BlockOperator BlockOperator::identity(const SpaceLayout& layout) {
  BlockOperator op(layout);
  for (const auto& b : layout.blocks()) op.set_block(b.label, Matrix::Identity(b.dim, b.dim));
  return op;
}

BlockOperator BlockOperator::pinch(const SpaceLayout& layout, const Matrix& dense) {
  if (dense.rows() != layout.total_dim() || dense.cols() != layout.total_dim()) {
    throw std::invalid_argument("BlockOperator::pinch: dense operator does not match layout");
  }
  BlockOperator op(layout);
  for (const auto& b : layout.blocks()) op.set_block(b.label, extract_block(layout, b.label, dense));
  return op;
}

Matrix BlockOperator::block(BlockLabel label) const {
  auto it = blocks_.find(label);
  if (it != blocks_.end()) return it->second;
  const Index n = layout_.dim(label);
  return Matrix::Zero(n, n);
}

void BlockOperator::set_block(BlockLabel label, const Matrix& value) {
  const Index n = layout_.dim(label);
  if (value.rows() != n || value.cols() != n) {
    throw std::invalid_argument("BlockOperator::set_block: block " + label.str() + " has wrong size");
  }
  if (hermitian_deviation(value) > kHermitianTol) {
    throw NotHermitianError("BlockOperator::set_block: block " + label.str() + " is not Hermitian");
  }
  blocks_[label] = symmetrized(value);
}

Matrix BlockOperator::to_dense() const {
  Matrix out = Matrix::Zero(layout_.total_dim(), layout_.total_dim());
  for (const auto& [label, m] : blocks_) {
    const Index off = layout_.offset(label);
    out.block(off, off, m.rows(), m.cols()) = m;
  }
  return out;
}

double BlockOperator::trace() const {
  double t = 0.0;
  for (const auto& [label, m] : blocks_) t += m.trace().real();
  return t;
}

BlockOperator& BlockOperator::operator+=(const BlockOperator& other) {
  if (!(layout_ == other.layout_)) throw std::invalid_argument("BlockOperator: layout mismatch");
  for (const auto& [label, m] : other.blocks_) {
    auto it = blocks_.find(label);
    if (it == blocks_.end()) {
      blocks_[label] = m;
    } else {
      it->second += m;
    }
  }
  return *this;
}

BlockOperator& BlockOperator::operator-=(const BlockOperator& other) { return *this += (-1.0) * other; }

BlockOperator& BlockOperator::operator*=(double s) {
  for (auto& [label, m] : blocks_) m *= s;
  return *this;
}

BlockOperator operator+(BlockOperator a, const BlockOperator& b) { return a += b; }
BlockOperator operator-(BlockOperator a, const BlockOperator& b) { return a -= b; }
BlockOperator operator*(double s, BlockOperator a) { return a *= s; }
BlockOperator operator*(BlockOperator a, double s) { return a *= s; }

BlockOperator direct_sum(const std::vector<std::pair<BlockLabel, Matrix>>& parts) {
  std::vector<LayoutBlock> blocks;
  for (const auto& [label, m] : parts) {
    if (m.rows() != m.cols()) throw std::invalid_argument("direct_sum: block " + label.str() + " is not square");
    if (m.rows() == 0) throw std::invalid_argument("direct_sum: block " + label.str() + " has dimension zero");
    blocks.push_back({label, m.rows()});
  }
  BlockOperator op{SpaceLayout(std::move(blocks))};
  for (const auto& [label, m] : parts) op.set_block(label, m);
  return op;
}

double min_eigenvalue(const BlockOperator& op) {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& b : op.layout().blocks()) {
    lo = std::min(lo, op.has_block(b.label) ? min_eigenvalue(op.block(b.label)) : 0.0);
  }
  return lo;
}

double max_eigenvalue(const BlockOperator& op) {
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& b : op.layout().blocks()) {
    hi = std::max(hi, op.has_block(b.label) ? max_eigenvalue(op.block(b.label)) : 0.0);
  }
  return hi;
}

bool psd_check(const BlockOperator& op, double tol) {
  if (tol < 0) throw std::invalid_argument("psd_check: tolerance must be non-negative");
  return min_eigenvalue(op) >= -tol;
}

double max_abs_difference(const BlockOperator& a, const BlockOperator& b) {
  if (!(a.layout() == b.layout())) throw std::invalid_argument("max_abs_difference: layout mismatch");
  double worst = 0.0;
  for (const auto& blk : a.layout().blocks()) {
    const Matrix d = a.block(blk.label) - b.block(blk.label);
    worst = std::max(worst, d.cwiseAbs().maxCoeff());
  }
  return worst;
}

Matrix block_projector(const SpaceLayout& layout, const std::vector<BlockLabel>& labels) {
  Matrix p = Matrix::Zero(layout.total_dim(), layout.total_dim());
  for (auto label : labels) {
    const Index off = layout.offset(label);
    const Index n = layout.dim(label);
    p.block(off, off, n, n).setIdentity();
  }
  return p;
}

Matrix embed_block(const SpaceLayout& layout, BlockLabel label, const Matrix& value) {
  const Index n = layout.dim(label);
  if (value.rows() != n || value.cols() != n) throw std::invalid_argument("embed_block: size mismatch for " + label.str());
  Matrix out = Matrix::Zero(layout.total_dim(), layout.total_dim());
  out.block(layout.offset(label), layout.offset(label), n, n) = value;
  return out;
}

Matrix extract_block(const SpaceLayout& layout, BlockLabel label, const Matrix& dense) {
  const Index n = layout.dim(label);
  const Index off = layout.offset(label);
  return dense.block(off, off, n, n);
}

Matrix basis_projector(Index n, Index i) {
  if (i < 0 || i >= n) throw std::out_of_range("basis_projector: index out of range");
  Matrix p = Matrix::Zero(n, n);
  p(i, i) = 1.0;
  return p;
}

// --------------------------- DensityLike -------------------------------------

DensityLike DensityLike::from_dense(SpaceLayout layout, const Matrix& rho) {
  if (rho.rows() != layout.total_dim() || rho.cols() != layout.total_dim()) {
    throw std::invalid_argument("DensityLike: matrix does not match layout");
  }
  if (hermitian_deviation(rho) > kHermitianTol) throw NotHermitianError("DensityLike: matrix is not Hermitian");
  Matrix sym = symmetrized(rho);
  const double tr = sym.trace().real();
  if (std::abs(tr - 1.0) > kStateTol) throw std::invalid_argument("DensityLike: trace is not 1");
  if (min_eigenvalue(sym) < -kStateTol) throw std::invalid_argument("DensityLike: matrix is not positive semidefinite");
  return DensityLike(std::move(layout), std::move(sym));
}

DensityLike DensityLike::from_blocks(const BlockOperator& op) { return from_dense(op.layout(), op.to_dense()); }

DensityLike vacuum_state(const SpaceLayout& layout) {
  return DensityLike::from_dense(layout, embed_block(layout, BlockLabel::photons(0), Matrix::Identity(1, 1)));
}

DensityLike flag_state(const SpaceLayout& layout, Index i) {
  const Index n = layout.dim(BlockLabel::flag());
  return DensityLike::from_dense(layout, embed_block(layout, BlockLabel::flag(), basis_projector(n, i)));
}

}  // namespace flagsq
