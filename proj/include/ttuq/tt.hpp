// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Sparse>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ttuq/dense.hpp"

namespace ttuq {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

struct ShapeMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"), offset(offset) {}
  std::size_t offset;
};

// One TT block of shape rl x n x rr, stored rank-major: (a, j, b) -> a*n*rr + j*rr + b.
struct TtCore {
  Index rl = 1, n = 1, rr = 1;
  std::vector<double> data;

  TtCore() : data(1, 0.0) {}
  TtCore(Index rl_, Index n_, Index rr_) : rl(rl_), n(n_), rr(rr_), data(static_cast<std::size_t>(rl_ * n_ * rr_), 0.0) {}

  double& operator()(Index a, Index j, Index b) { return data[static_cast<std::size_t>((a * n + j) * rr + b)]; }
  double operator()(Index a, Index j, Index b) const { return data[static_cast<std::size_t>((a * n + j) * rr + b)]; }

  // (rl*n) x rr
  MatrixMap left() { return {data.data(), rl * n, rr}; }
  ConstMatrixMap left() const { return {data.data(), rl * n, rr}; }
  // rl x (n*rr)
  MatrixMap right() { return {data.data(), rl, n * rr}; }
  ConstMatrixMap right() const { return {data.data(), rl, n * rr}; }
  // rl x rr slice at mode index j
  Eigen::Map<const Matrix, 0, Eigen::OuterStride<>> slice(Index j) const {
    return {data.data() + j * rr, rl, rr, Eigen::OuterStride<>(n * rr)};
  }
  Eigen::Map<Matrix, 0, Eigen::OuterStride<>> slice(Index j) {
    return {data.data() + j * rr, rl, rr, Eigen::OuterStride<>(n * rr)};
  }

  static TtCore from_left(const MatrixRef& m, Index rl, Index n);
  static TtCore from_right(const MatrixRef& m, Index n, Index rr);
};

class TtTensor {
 public:
  TtTensor() = default;
  explicit TtTensor(std::vector<TtCore> cores);

  static TtTensor zeros(const std::vector<Index>& modes);
  static TtTensor constant(const std::vector<Index>& modes, double value);
  static TtTensor rank_one(const std::vector<Vector>& factors);
  static TtTensor random(const std::vector<Index>& modes, const std::vector<Index>& ranks, std::mt19937_64& rng);

  // number of modes (d+1)
  Index order() const { return static_cast<Index>(cores_.size()); }
  Index mode_size(Index k) const { return cores_[static_cast<std::size_t>(k)].n; }
  std::vector<Index> mode_sizes() const;
  // bond ranks r_0..r_{d-1}
  std::vector<Index> ranks() const;
  Index max_rank() const;
  const TtCore& core(Index k) const { return cores_[static_cast<std::size_t>(k)]; }
  const std::vector<TtCore>& cores() const { return cores_; }
  std::size_t storage() const;

 private:
  std::vector<TtCore> cores_;
};

enum class Direction { left, right };

double element(const TtTensor& v, std::span<const Index> idx);
std::vector<double> full_expand(const TtTensor& v, std::size_t cap = 1000000);
double inner(const TtTensor& u, const TtTensor& v);
double norm(const TtTensor& v);
TtTensor orthogonalize(const TtTensor& v, Direction dir);
TtTensor round(const TtTensor& v, double rel_tol, Index rank_cap = -1);
TtTensor add(const TtTensor& u, const TtTensor& v);
TtTensor scale(const TtTensor& v, double s);
// ||u - v|| without forming the rounded difference
double distance(const TtTensor& u, const TtTensor& v);

// Left-to-right sweep of QR carries on a mutable block list. Leaves blocks 0..k-1 left-orthogonal.
void left_orthogonalize_to(std::vector<TtCore>& cores, Index k);
// Leaves blocks k+1..d right-orthogonal.
void right_orthogonalize_to(std::vector<TtCore>& cores, Index k);

enum class BlockKind { dense, diagonal, sparse };

// Matrix TT block of shape Rl x rows x cols x Rr.
// dense: entries (g, i, j, h) at ((g*rows + i)*cols + j)*Rr + h
// diagonal: rows == cols, entries (g, i, h) at (g*rows + i)*Rr + h
// sparse: one rows x cols sparse matrix per (g, h) at g*Rr + h
struct TtMatrixCore {
  Index rl = 1, rows = 1, cols = 1, rr = 1;
  BlockKind kind = BlockKind::dense;
  std::vector<double> data;
  std::vector<SparseMatrix> sparse;

  static TtMatrixCore dense_block(Index rl, Index rows, Index cols, Index rr);
  static TtMatrixCore diagonal_block(Index rl, Index n, Index rr);
  static TtMatrixCore sparse_block(Index rl, Index rr, std::vector<SparseMatrix> mats);

  double entry(Index g, Index i, Index j, Index h) const;
};

class TtMatrix {
 public:
  TtMatrix() = default;
  explicit TtMatrix(std::vector<TtMatrixCore> cores);
  static TtMatrix identity(const std::vector<Index>& modes);

  Index order() const { return static_cast<Index>(cores_.size()); }
  const TtMatrixCore& core(Index k) const { return cores_[static_cast<std::size_t>(k)]; }
  std::vector<Index> row_sizes() const;
  std::vector<Index> col_sizes() const;
  std::vector<Index> ranks() const;

 private:
  std::vector<TtMatrixCore> cores_;
};

TtTensor matvec(const TtMatrix& a, const TtTensor& v);

std::vector<std::uint8_t> serialize(const TtTensor& v);
TtTensor deserialize(std::span<const std::uint8_t> bytes);
void write_ttb(const std::filesystem::path& path, const TtTensor& v);
TtTensor read_ttb(const std::filesystem::path& path);

}  // namespace ttuq
