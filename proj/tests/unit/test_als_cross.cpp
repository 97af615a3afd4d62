// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "ttuq/als_cross.hpp"
#include "ttuq/stochastic.hpp"

using namespace ttuq;
using namespace ttuq::stochastic;

namespace {

TtTensor affine_coeff(const fem::Mesh& mesh, const std::vector<Index>& sizes) {
  KleSpec s;
  s.form = Form::affine;
  s.dist = Dist::uniform;
  s.sigma2 = 4.0;
  return round(coeff_affine_tt(s, mesh, ParamGrid::build(Dist::uniform, sizes)), 1e-14);
}

TtTensor log_coeff(const fem::Mesh& mesh, const std::vector<Index>& sizes, double tol = 1e-8) {
  KleSpec s;
  s.nu = 2;
  LogCoeffOptions o;
  o.rel_tol = tol;
  o.init_count = 200;
  return coeff_log_tt(s, mesh, ParamGrid::build(Dist::normal, sizes), o).tt;
}

std::vector<std::vector<Index>> all_tuples(const std::vector<Index>& sizes) {
  std::vector<std::vector<Index>> out{{}};
  for (Index n : sizes) {
    std::vector<std::vector<Index>> next;
    for (const auto& t : out)
      for (Index j = 0; j < n; ++j) {
        auto u = t;
        u.push_back(j);
        next.push_back(std::move(u));
      }
    out = std::move(next);
  }
  return out;
}

double max_fiber_error(const fem::FemOperator& op, const TtTensor& c, const TtTensor& u,
                       const std::vector<std::vector<Index>>& params) {
  double err = 0.0, scale = 0.0;
  for (const auto& j : params) {
    const Vector cj = als::spatial_fiber(c, j);
    const auto A = op.assemble({cj.data(), static_cast<std::size_t>(cj.size())});
    const Vector ref = fem::det_solve(A, op.lift({cj.data(), static_cast<std::size_t>(cj.size())}));
    err = std::max(err, (als::spatial_fiber(u, j) - ref).cwiseAbs().maxCoeff());
    scale = std::max(scale, ref.cwiseAbs().maxCoeff());
  }
  return err / scale;
}

}  // namespace

TEST(Als, ConstantCoefficientIsRankOne) {
  const auto mesh = fem::Mesh::with_cells(8);
  const fem::FemOperator op(mesh);
  const auto c = TtTensor::constant({op.nodes(), 3, 4}, 1.5);
  als::AlsOptions o;
  auto res = als::solve(op, c, als::lifted_rhs(op, c), o);
  EXPECT_EQ(res.report.det_solves, 1u);
  EXPECT_EQ(res.u.ranks(), (std::vector<Index>{1, 1}));
  EXPECT_TRUE(res.report.converged);
  EXPECT_LE(max_fiber_error(op, c, res.u, all_tuples({3, 4})), 1e-12);
}

TEST(Als, RankOneScalarParameter) {
  // c(x, y) = g(y): solution equals the c = 1 solution for every y
  const auto mesh = fem::Mesh::with_cells(4);
  const fem::FemOperator op(mesh);
  const auto c = TtTensor::rank_one({Vector::Ones(op.nodes()), (Vector(3) << 0.5, 1.0, 4.0).finished()});
  auto res = als::solve(op, c, als::lifted_rhs(op, c), {});
  EXPECT_EQ(res.report.det_solves, 1u);
  EXPECT_LE(max_fiber_error(op, c, res.u, all_tuples({3})), 1e-13);
}

TEST(Als, MatchesDenseBlockDiagonalOracle) {
  const auto mesh = fem::Mesh::with_cells(4);
  const fem::FemOperator op(mesh);
  const auto c = affine_coeff(mesh, {3, 3});
  als::AlsOptions o;
  o.mode = als::Mode::iterative;
  o.rel_tol = 1e-12;
  o.enrich_rank = 4;
  auto res = als::solve(op, c, als::lifted_rhs(op, c), o);
  EXPECT_TRUE(res.report.converged);
  EXPECT_LE(max_fiber_error(op, c, res.u, all_tuples({3, 3})), 1e-9);
}

TEST(Als, OneShotAccuracyLogField) {
  const auto mesh = fem::Mesh::with_cells(8);
  const fem::FemOperator op(mesh);
  const auto c = log_coeff(mesh, {5, 4, 3});
  als::AlsOptions o;
  o.rel_tol = 1e-6;
  auto res = als::solve(op, c, als::lifted_rhs(op, c), o);
  EXPECT_EQ(res.report.sweeps, 1);
  EXPECT_EQ(res.report.det_solves, static_cast<std::size_t>(res.report.det_solves_per_sweep.at(0)));
  EXPECT_LE(max_fiber_error(op, c, res.u, all_tuples({5, 4, 3})), 1e-4);
}

TEST(Als, IterativeResidualShrinks) {
  const auto mesh = fem::Mesh::with_cells(8);
  const fem::FemOperator op(mesh);
  const auto c = log_coeff(mesh, {5, 4, 3, 3});
  const auto f = als::lifted_rhs(op, c);
  als::AlsOptions o;
  o.mode = als::Mode::iterative;
  o.rel_tol = 1e-8;
  als::AlsCross s(op, c, f, o);
  s.initialize();
  std::mt19937_64 rng(3);
  std::vector<std::vector<Index>> samples;
  for (int t = 0; t < 20; ++t) {
    std::vector<Index> j;
    for (Index n : {5, 4, 3, 3}) j.push_back(static_cast<Index>(rng() % static_cast<std::uint64_t>(n)));
    samples.push_back(j);
  }
  std::vector<double> res;
  for (int sw = 0; sw < 4; ++sw) {
    s.sweep();
    res.push_back(als::sampled_residual(op, c, f, s.solution(), samples));
  }
  EXPECT_LT(res.back(), res.front());
  EXPECT_LE(res.back(), 1e-6);
}

TEST(Als, ProjectionsMatchFromScratch) {
  const auto mesh = fem::Mesh::with_cells(8);
  const fem::FemOperator op(mesh);
  const auto c = log_coeff(mesh, {3, 3, 2}, 1e-6);
  als::AlsOptions o;
  o.mode = als::Mode::iterative;
  o.rel_tol = 1e-6;
  als::AlsCross s(op, c, als::lifted_rhs(op, c), o);
  s.initialize();
  s.spatial_step();
  for (Index k = 1; k <= s.dim(); ++k) {
    if (k > 1) s.forward_step(k - 1);
    const auto ref = als::reference_a_left(s, k);
    const auto& got = s.a_left(k);
    ASSERT_EQ(ref.size(), got.size());
    double scale = 0.0, err = 0.0;
    for (std::size_t g = 0; g < ref.size(); ++g) {
      scale = std::max(scale, ref[g].cwiseAbs().maxCoeff());
      err = std::max(err, (ref[g] - got[g]).cwiseAbs().maxCoeff());
    }
    EXPECT_LE(err / scale, 1e-12) << "k=" << k;
    const Matrix fr = als::reference_f_left(s, k);
    EXPECT_LE((fr - s.f_left(k)).cwiseAbs().maxCoeff() / fr.cwiseAbs().maxCoeff(), 1e-12) << "k=" << k;
  }
  s.forward_step(s.dim());
  for (Index k = s.dim(); k >= 1; --k) s.backward_step(k);
  for (Index k = 0; k < s.dim(); ++k) {
    const auto& J = s.right_set(k);
    const Matrix cr = cross::right_interface(c.cores(), J);
    EXPECT_LE((cr - s.c_right(k)).cwiseAbs().maxCoeff() / cr.cwiseAbs().maxCoeff(), 1e-12) << "k=" << k;
    const Matrix fr = cross::right_interface(s.rhs().cores(), J);
    EXPECT_LE((fr - s.f_right(k)).cwiseAbs().maxCoeff() / fr.cwiseAbs().maxCoeff(), 1e-12) << "k=" << k;
    // interpolatory blocks: the solution interface at J_{>k} is the identity
    const Matrix sel = cross::right_interface(s.cores(), J);
    ASSERT_EQ(sel.rows(), sel.cols());
    EXPECT_LE((sel - Matrix::Identity(sel.rows(), sel.cols())).cwiseAbs().maxCoeff(), 1e-10) << "k=" << k;
  }
}

TEST(Als, DetSolveCountEqualsR0PerSweep) {
  const auto mesh = fem::Mesh::with_cells(8);
  const fem::FemOperator op(mesh);
  const auto c = log_coeff(mesh, {4, 3, 3});
  als::AlsOptions o;
  o.mode = als::Mode::iterative;
  o.rel_tol = 1e-7;
  o.max_sweeps = 3;
  als::AlsCross s(op, c, als::lifted_rhs(op, c), o);
  s.initialize();
  std::size_t total = 0;
  for (int sw = 0; sw < 3; ++sw) {
    const Index r0 = s.right_set(0).rows;
    EXPECT_EQ(r0, s.cores()[0].rr);
    s.sweep();
    EXPECT_EQ(s.report().det_solves_per_sweep.back(), r0);
    total += static_cast<std::size_t>(r0);
  }
  EXPECT_EQ(s.report().det_solves, total);
}

TEST(Als, SerialAndParallelAgree) {
  const auto mesh = fem::Mesh::with_cells(8);
  const fem::FemOperator op(mesh);
  const auto c = log_coeff(mesh, {4, 3});
  als::AlsOptions o;
  o.rel_tol = 1e-6;
  o.parallel = false;
  auto a = als::solve(op, c, als::lifted_rhs(op, c), o);
  o.parallel = true;
  auto b = als::solve(op, c, als::lifted_rhs(op, c), o);
  EXPECT_LE(distance(a.u, b.u) / norm(a.u), 1e-13);
}

TEST(Als, SnapshotFailureNamesTuple) {
  const auto mesh = fem::Mesh::with_cells(4);
  const fem::FemOperator op(mesh);
  // negative coefficient: the stiffness matrix is not positive definite
  const auto c = TtTensor::rank_one({Vector::Ones(op.nodes()), (Vector(2) << -1.0, -2.0).finished()});
  for (bool parallel : {false, true}) {
    als::AlsOptions o;
    o.parallel = parallel;
    als::AlsCross s(op, c, als::lifted_rhs(op, c), o);
    try {
      s.run();
      ADD_FAILURE() << "expected a solve error";
    } catch (const fem::SolveError& e) {
      EXPECT_NE(std::string(e.what()).find("J_{>0} tuple ("), std::string::npos) << e.what();
    }
  }
}

TEST(Als, OptionsValidate) {
  als::AlsOptions o;
  o.rel_tol = 0.0;
  EXPECT_THROW(o.validate(), InvalidInput);
  EXPECT_EQ(als::parse_mode("iterative"), als::Mode::iterative);
  EXPECT_THROW(als::parse_mode("twice"), InvalidInput);
  const auto mesh = fem::Mesh::with_cells(4);
  const fem::FemOperator op(mesh);
  const auto c = TtTensor::constant({op.nodes() + 1, 2}, 1.0);
  EXPECT_THROW(als::AlsCross(op, c, c), ShapeMismatch);
}

TEST(Als, SpatialStepIsGalerkin) {
  const auto mesh = fem::Mesh::with_cells(8);
  const fem::FemOperator op(mesh);
  const auto c = log_coeff(mesh, {4, 3, 3}, 1e-6);
  const auto f = als::lifted_rhs(op, c);
  als::AlsCross s(op, c, f, {});
  s.initialize();
  const Matrix c_at = s.c_right(0);
  const Matrix f_at = s.f_right(0);
  s.spatial_step();
  const Matrix Q = s.cores()[0].left();
  const auto& A1 = s.a_left(1);
  for (Index a = 0; a < c_at.cols(); ++a) {
    Matrix m = Matrix::Zero(Q.cols(), Q.cols());
    for (std::size_t g = 0; g < A1.size(); ++g) m += c_at(static_cast<Index>(g), a) * A1[g];
    const Vector uhat = m.lu().solve(Vector(s.f_left(1) * f_at.col(a)));
    const Vector cn = Matrix(c.core(0).left()) * c_at.col(a);
    const Vector fn = Matrix(f.core(0).left()) * f_at.col(a);
    const auto A = op.assemble({cn.data(), static_cast<std::size_t>(cn.size())});
    const Vector pr = Q.transpose() * (fn - A * (Q * uhat));
    EXPECT_LE(pr.norm() / fn.norm(), 1e-10) << "sample " << a;
  }
}
