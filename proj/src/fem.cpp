// SPDX-License-Identifier: Apache-2.0
#include "ttuq/fem.hpp"

#include <algorithm>
#include <cmath>

#include "ttuq/log.hpp"

namespace ttuq::fem {

Mesh Mesh::from_level(int level) {
  if (level < 0 || level > 12) throw InvalidInput("Mesh: level out of range");
  return Mesh(level, Index{1} << (level + 3));
}

Mesh Mesh::with_cells(Index cells_per_side) {
  if (cells_per_side < 2) throw InvalidInput("Mesh: need at least 2 cells per side");
  int level = -1;
  for (int l = 0; l <= 12; ++l)
    if ((Index{1} << (l + 3)) == cells_per_side) level = l;
  return Mesh(level, cells_per_side);
}

Index Mesh::node_to_dof(Index node) const {
  const Index i1 = node / (m_ + 1);
  return (i1 == 0 || i1 == m_) ? -1 : node - (m_ + 1);
}

std::array<double, 2> Mesh::node_xy(Index node) const {
  const Index i1 = node / (m_ + 1), i2 = node % (m_ + 1);
  return {static_cast<double>(i1) * h(), static_cast<double>(i2) * h()};
}

namespace {

// Reference cell [0,1]^2, local nodes (0,0), (1,0), (0,1), (1,1) in (x1, x2).
// kref[s][i][j] = integral of phi_s grad phi_i . grad phi_j; independent of h in 2D.
using LocalTensor = std::array<std::array<std::array<double, 4>, 4>, 4>;

LocalTensor reference_tensor() {
  const double g = 0.5 / std::sqrt(3.0);
  const double pts[2] = {0.5 - g, 0.5 + g};
  const int ox[4] = {0, 1, 0, 1}, oy[4] = {0, 0, 1, 1};
  LocalTensor k{};
  for (double px : pts)
    for (double py : pts) {
      double phi[4], dx[4], dy[4];
      for (int a = 0; a < 4; ++a) {
        const double fx = ox[a] ? px : 1 - px, fy = oy[a] ? py : 1 - py;
        phi[a] = fx * fy;
        dx[a] = (ox[a] ? 1.0 : -1.0) * fy;
        dy[a] = (oy[a] ? 1.0 : -1.0) * fx;
      }
      for (int s = 0; s < 4; ++s)
        for (int i = 0; i < 4; ++i)
          for (int j = 0; j < 4; ++j) k[s][i][j] += 0.25 * phi[s] * (dx[i] * dx[j] + dy[i] * dy[j]);
    }
  return k;
}

std::array<Index, 4> cell_nodes(const Mesh& m, Index c1, Index c2) {
  return {m.node(c1, c2), m.node(c1 + 1, c2), m.node(c1, c2 + 1), m.node(c1 + 1, c2 + 1)};
}

}  // namespace

FemOperator::FemOperator(const Mesh& mesh) : mesh_(mesh) {
  const Index m = mesh.cells();
  const Index n = mesh.dof_count();
  const Index nn = mesh.node_count();
  const auto kref = reference_tensor();

  std::vector<Eigen::Triplet<double, int>> pat;
  for (Index c1 = 0; c1 < m; ++c1)
    for (Index c2 = 0; c2 < m; ++c2) {
      const auto nodes = cell_nodes(mesh, c1, c2);
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
          const Index di = mesh.node_to_dof(nodes[i]), dj = mesh.node_to_dof(nodes[j]);
          if (di >= 0 && dj >= 0) pat.emplace_back(static_cast<int>(di), static_cast<int>(dj), 1.0);
        }
    }
  pattern_.resize(n, n);
  pattern_.setFromTriplets(pat.begin(), pat.end());
  pattern_.makeCompressed();

  auto position = [&](Index row, Index col) {
    const int* outer = pattern_.outerIndexPtr();
    const int* inner = pattern_.innerIndexPtr();
    const int* lo = inner + outer[row];
    const int* hi = inner + outer[row + 1];
    const int* it = std::lower_bound(lo, hi, static_cast<int>(col));
    return static_cast<int>(it - inner);
  };

  std::vector<Eigen::Triplet<double, int>> vm, lm;
  for (Index c1 = 0; c1 < m; ++c1)
    for (Index c2 = 0; c2 < m; ++c2) {
      const auto nodes = cell_nodes(mesh, c1, c2);
      for (int i = 0; i < 4; ++i) {
        const Index di = mesh.node_to_dof(nodes[i]);
        if (di < 0) continue;
        for (int j = 0; j < 4; ++j) {
          const Index dj = mesh.node_to_dof(nodes[j]);
          const bool dirichlet_one = dj < 0 && nodes[j] / (m + 1) == 0;
          if (dj < 0 && !dirichlet_one) continue;
          for (int s = 0; s < 4; ++s) {
            const double v = kref[s][i][j];
            if (v == 0.0) continue;
            if (dj >= 0)
              vm.emplace_back(position(di, dj), static_cast<int>(nodes[s]), v);
            else
              lm.emplace_back(static_cast<int>(di), static_cast<int>(nodes[s]), -v);
          }
        }
      }
    }
  value_map_.resize(pattern_.nonZeros(), nn);
  value_map_.setFromTriplets(vm.begin(), vm.end());
  value_map_.makeCompressed();
  lift_map_.resize(n, nn);
  lift_map_.setFromTriplets(lm.begin(), lm.end());
  lift_map_.makeCompressed();
}

void FemOperator::assemble_values(std::span<const double> c, std::span<double> values) const {
  if (static_cast<Index>(c.size()) != nodes()) throw ShapeMismatch("assemble: coefficient must cover every grid node");
  if (static_cast<Index>(values.size()) != nnz()) throw ShapeMismatch("assemble: value buffer size mismatch");
  Eigen::Map<const Vector> cv(c.data(), nodes());
  Eigen::Map<Vector>(values.data(), nnz()).noalias() = value_map_ * cv;
}

SparseMatrix FemOperator::assemble(std::span<const double> c) const {
  if (static_cast<Index>(c.size()) != nodes()) throw ShapeMismatch("assemble: coefficient must cover every grid node");
  const double cmin = *std::min_element(c.begin(), c.end());
  if (!(cmin > 0.0)) log::warn("assemble_stiffness: min nodal coefficient " + std::to_string(cmin) + " <= 0, operator may be indefinite");
  return assemble_component(c);
}

SparseMatrix FemOperator::assemble_component(std::span<const double> c) const {
  SparseMatrix a = pattern_;
  assemble_values(c, {a.valuePtr(), static_cast<std::size_t>(a.nonZeros())});
  return a;
}

Vector FemOperator::lift(std::span<const double> c) const {
  if (static_cast<Index>(c.size()) != nodes()) throw ShapeMismatch("lift: coefficient must cover every grid node");
  return lift_map_ * Eigen::Map<const Vector>(c.data(), nodes());
}

SparseMatrix assemble_stiffness(const Mesh& mesh, std::span<const double> c_nodal) {
  return FemOperator(mesh).assemble(c_nodal);
}

Vector dirichlet_lift_rhs(const Mesh& mesh, std::span<const double> c_nodal) { return FemOperator(mesh).lift(c_nodal); }

DetSolver::DetSolver(const FemOperator& op) : op_(&op), direct_(op.dofs() <= kDirectSolveMaxDofs) {}

namespace {

using ColMajorSparse = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

// A symmetric CSR matrix is its own CSC transpose.
Eigen::Map<const ColMajorSparse> as_csc(const SparseMatrix& a) {
  return {a.rows(), a.cols(), a.nonZeros(), a.outerIndexPtr(), a.innerIndexPtr(), a.valuePtr()};
}

std::string tag(std::string_view id) { return id.empty() ? std::string() : " (sample " + std::string(id) + ")"; }

Vector solve_with(const SparseMatrix& a, const Vector& b, std::string_view id, bool direct,
                  Eigen::SimplicialLLT<ColMajorSparse>* llt, bool* analyzed) {
  if (a.rows() != b.size()) throw ShapeMismatch("det_solve: rhs size mismatch");
  const double bn = b.norm();
  if (bn == 0.0) return Vector::Zero(b.size());
  auto csc = as_csc(a);
  Vector x;
  if (direct) {
    if (!*analyzed) {
      llt->analyzePattern(csc);
      *analyzed = true;
    }
    llt->factorize(csc);
    if (llt->info() != Eigen::Success) throw SolveError("det_solve: Cholesky breakdown, matrix not SPD" + tag(id));
    x = llt->solve(b);
    Vector r = b - a * x;
    if (r.norm() > 1e-12 * bn) x += llt->solve(r);
  } else {
    Eigen::ConjugateGradient<ColMajorSparse, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
    cg.setTolerance(1e-13);
    cg.setMaxIterations(20 * a.rows());
    cg.compute(csc);
    x = cg.solve(b);
    if (cg.info() != Eigen::Success) throw SolveError("det_solve: CG did not converge" + tag(id));
  }
  const double rel = (b - a * x).norm() / bn;
  if (!std::isfinite(rel) || rel > 1e-10) throw SolveError("det_solve: residual " + std::to_string(rel) + " too large" + tag(id));
  return x;
}

}  // namespace

Vector DetSolver::solve(const SparseMatrix& a, const Vector& b, std::string_view sample_id) {
  if (a.rows() != op_->dofs()) throw ShapeMismatch("DetSolver: matrix size differs from operator");
  return solve_with(a, b, sample_id, direct_, &llt_, &analyzed_);
}

Vector det_solve(const SparseMatrix& a, const Vector& b, std::string_view sample_id) {
  Eigen::SimplicialLLT<ColMajorSparse> llt;
  bool analyzed = false;
  return solve_with(a, b, sample_id, a.rows() <= kDirectSolveMaxDofs, &llt, &analyzed);
}

Vector to_nodal(const Mesh& mesh, const Vector& u_free) {
  if (u_free.size() != mesh.dof_count()) throw ShapeMismatch("to_nodal: vector size differs from DOF count");
  Vector u(mesh.node_count());
  const Index m = mesh.cells();
  for (Index i2 = 0; i2 <= m; ++i2) {
    u[mesh.node(0, i2)] = 1.0;
    u[mesh.node(m, i2)] = 0.0;
  }
  u.segment(m + 1, mesh.dof_count()) = u_free;
  return u;
}

Vector qoi_weights(const Mesh& mesh, bool average) {
  const Index m = mesh.cells();
  if (m % 8 != 0) throw InvalidInput("qoi_weights: subdomain must be resolved by whole cells (cells per side divisible by 8)");
  Vector w = Vector::Zero(mesh.dof_count());
  const double q = mesh.h() * mesh.h() / 4.0;
  for (Index c1 = 6 * m / 8; c1 < 7 * m / 8; ++c1)
    for (Index c2 = 7 * m / 8; c2 < m; ++c2)
      for (Index node : cell_nodes(mesh, c1, c2)) w[mesh.node_to_dof(node)] += q;
  if (average) w *= 64.0;
  return w;
}

}  // namespace ttuq::fem
