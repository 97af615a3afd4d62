// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <array>
#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "ttuq/tt.hpp"

namespace ttuq::fem {

struct SolveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Uniform grid of M x M bilinear cells on the unit square.
// Node (i1, i2) has coordinates (i1 h, i2 h) and id i1*(M+1) + i2 (x2 fastest).
// Free DOFs are the nodes with 0 < i1 < M; dof id = node id - (M+1).
class Mesh {
 public:
  static Mesh from_level(int level);
  static Mesh with_cells(Index cells_per_side);

  int level() const { return level_; }
  Index cells() const { return m_; }
  double h() const { return 1.0 / static_cast<double>(m_); }
  Index node_count() const { return (m_ + 1) * (m_ + 1); }
  Index dof_count() const { return (m_ - 1) * (m_ + 1); }
  Index node(Index i1, Index i2) const { return i1 * (m_ + 1) + i2; }
  Index dof_to_node(Index dof) const { return dof + m_ + 1; }
  // -1 for Dirichlet nodes
  Index node_to_dof(Index node) const;
  std::array<double, 2> node_xy(Index node) const;

 private:
  Mesh(int level, Index m) : level_(level), m_(m) {}
  int level_;
  Index m_;
};

// Stiffness assembly over a fixed sparsity pattern. Values are linear in the nodal
// coefficient, so assembly is a sparse matrix-vector product with a precomputed map.
class FemOperator {
 public:
  explicit FemOperator(const Mesh& mesh);

  const Mesh& mesh() const { return mesh_; }
  Index dofs() const { return mesh_.dof_count(); }
  Index nodes() const { return mesh_.node_count(); }
  Index nnz() const { return static_cast<Index>(pattern_.nonZeros()); }

  SparseMatrix assemble(std::span<const double> c_nodal) const;
  // same operator for a coefficient of any sign, such as one column of a TT block
  SparseMatrix assemble_component(std::span<const double> c_nodal) const;
  void assemble_values(std::span<const double> c_nodal, std::span<double> values) const;
  // b_i = -sum over x1 = 0 nodes s of A_{i,s} * 1
  Vector lift(std::span<const double> c_nodal) const;
  const SparseMatrix& pattern() const { return pattern_; }
  // maps nodal coefficient to CSR values (nnz x nodes) and to the lifted rhs (dofs x nodes)
  const SparseMatrix& value_map() const { return value_map_; }
  const SparseMatrix& lift_map() const { return lift_map_; }

 private:
  Mesh mesh_;
  SparseMatrix pattern_;
  SparseMatrix value_map_;
  SparseMatrix lift_map_;
};

// Free-standing forms of the operator API.
SparseMatrix assemble_stiffness(const Mesh& mesh, std::span<const double> c_nodal);
Vector dirichlet_lift_rhs(const Mesh& mesh, std::span<const double> c_nodal);

// Reusable solver for matrices sharing the FemOperator pattern. Not thread-safe; use one per thread.
class DetSolver {
 public:
  explicit DetSolver(const FemOperator& op);
  Vector solve(const SparseMatrix& a, const Vector& b, std::string_view sample_id = "");
  bool direct() const { return direct_; }

 private:
  using ColMajor = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
  const FemOperator* op_;
  bool direct_;
  Eigen::SimplicialLLT<ColMajor> llt_;
  bool analyzed_ = false;
};

// Level <= 5 meshes use sparse Cholesky, finer meshes use Jacobi-preconditioned CG.
inline constexpr Index kDirectSolveMaxDofs = 255 * 257;

Vector det_solve(const SparseMatrix& a, const Vector& b, std::string_view sample_id = "");

// Expand free-DOF values to all nodes with u = 1 on x1 = 0 and u = 0 on x1 = 1.
Vector to_nodal(const Mesh& mesh, const Vector& u_free);

// w^T u_free = integral of u_h over [6/8,7/8] x [7/8,1]; the mean over it when average is set
Vector qoi_weights(const Mesh& mesh, bool average = false);

}  // namespace ttuq::fem
