// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ttuq/dense.hpp"

using namespace ttuq;
using namespace ttuq::dense;

namespace {

Matrix random_matrix(Index n, Index m, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Matrix a(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) a(i, j) = nd(rng);
  return a;
}

// Brute-force maximum |det| over all r-row subsets.
double best_volume(const Matrix& m) {
  const Index n = m.rows(), r = m.cols();
  std::vector<Index> pick(r);
  for (Index i = 0; i < r; ++i) pick[i] = i;
  double best = 0.0;
  while (true) {
    Eigen::MatrixXd sub(r, r);
    for (Index i = 0; i < r; ++i) sub.row(i) = m.row(pick[i]);
    best = std::max(best, std::abs(sub.determinant()));
    Index k = r - 1;
    while (k >= 0 && pick[k] == n - r + k) --k;
    if (k < 0) break;
    ++pick[k];
    for (Index i = k + 1; i < r; ++i) pick[i] = pick[i - 1] + 1;
  }
  return best;
}

}  // namespace

TEST(QrThin, Identity) {
  Matrix i3 = Matrix::Identity(3, 3);
  auto qr = qr_thin(i3);
  EXPECT_LE((qr.q.cwiseAbs() - i3).norm(), 1e-15);
  EXPECT_LE((qr.r.cwiseAbs() - i3).norm(), 1e-15);
}

TEST(QrThin, SingleColumn) {
  Matrix m(2, 1);
  m << 3, 4;
  auto qr = qr_thin(m);
  const double sign = qr.r(0, 0) > 0 ? 1.0 : -1.0;
  EXPECT_NEAR(sign * qr.q(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(sign * qr.q(1, 0), 0.8, 1e-15);
  EXPECT_NEAR(std::abs(qr.r(0, 0)), 5.0, 1e-14);
}

TEST(QrThin, RandomOrthonormality) {
  std::mt19937_64 rng(3);
  for (Index cols : {5, 30}) {
    Matrix m = random_matrix(20, cols, rng);
    auto qr = qr_thin(m);
    EXPECT_EQ(qr.q.cols(), std::min<Index>(20, cols));
    EXPECT_LE((qr.q.transpose() * qr.q - Matrix::Identity(qr.q.cols(), qr.q.cols())).norm(), 1e-13);
    EXPECT_LE((qr.q * qr.r - m).norm(), 1e-13 * m.norm());
  }
}

TEST(QrThin, RejectsNonFinite) {
  Matrix m = Matrix::Ones(2, 2);
  m(1, 0) = std::nan("");
  EXPECT_THROW(qr_thin(m), InvalidInput);
}

TEST(SvdTruncate, RankOneOuterProduct) {
  Vector a = Vector::LinSpaced(6, 1, 6), b = Vector::LinSpaced(4, -1, 2);
  Matrix m = a * b.transpose();
  auto s = svd_truncate(m, 1e-8);
  EXPECT_EQ(s.rank, 1);
}

TEST(SvdTruncate, DiagonalTail) {
  Matrix m = Matrix::Zero(3, 3);
  m.diagonal() << 1, 1e-3, 1e-9;
  EXPECT_EQ(svd_truncate(m, 1e-6).rank, 2);
}

TEST(SvdTruncate, IdentityTailFormula) {
  Matrix m = Matrix::Identity(4, 4);
  EXPECT_EQ(svd_truncate(m, 0.9).rank, 1);
  EXPECT_EQ(svd_truncate(m, 0.5).rank, 3);
  EXPECT_EQ(svd_truncate(m, 0.0).rank, 4);
}

TEST(SvdTruncate, ZeroMatrixGivesRankZero) {
  auto s = svd_truncate(Matrix::Zero(3, 2), 1e-3);
  EXPECT_EQ(s.rank, 0);
  EXPECT_EQ(s.u.cols(), 0);
}

TEST(SvdTruncate, TailBoundCapAndIdempotence) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    Matrix m = random_matrix(15, 9, rng);
    for (Index j = 0; j < 9; ++j) m.col(j) *= std::pow(0.3, j);
    const double tol = 0.05;
    auto s = svd_truncate(m, tol);
    Matrix rec = s.u * s.s.asDiagonal() * s.vt;
    EXPECT_LE((m - rec).norm(), tol * m.norm() * (1 + 1e-12));
    EXPECT_LE((s.u.transpose() * s.u - Matrix::Identity(s.rank, s.rank)).norm(), 1e-12);
    for (Index i = 1; i < s.rank; ++i) EXPECT_GE(s.s[i - 1], s.s[i]);
    // one rank fewer must violate the bound (minimality)
    if (s.rank > 1) {
      auto c = svd_truncate(m, 0.0, s.rank - 1);
      Matrix rc = c.u * c.s.asDiagonal() * c.vt;
      EXPECT_GT((m - rc).norm(), tol * m.norm());
    }
    auto again = svd_truncate(rec, tol);
    EXPECT_EQ(again.rank, s.rank);
    EXPECT_EQ(svd_truncate(m, tol, 2).rank, std::min<Index>(2, s.rank));
  }
}

TEST(Maxvol, IdentityAndColumn) {
  auto p = maxvol(Matrix::Identity(4, 4));
  std::sort(p.begin(), p.end());
  EXPECT_EQ(p, (PivotSet{0, 1, 2, 3}));
  Matrix c(3, 1);
  c << 1, 2, 3;
  EXPECT_EQ(maxvol(c), (PivotSet{2}));
}

TEST(Maxvol, DominanceAndVolumeAgainstEnumeration) {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 50; ++t) {
    Matrix q = qr_thin(random_matrix(20, 5, rng)).q;
    auto piv = maxvol(q, {0.01, 100});
    ASSERT_EQ(piv.size(), 5u);
    Matrix sub = select_rows(q, piv);
    Matrix b = q * sub.inverse();
    EXPECT_LE(b.cwiseAbs().maxCoeff(), 1.01);
    EXPECT_GE(std::abs(sub.determinant()), 0.2 * best_volume(q));
  }
}

TEST(Maxvol, RankDeficientThrows) {
  Matrix m = Matrix::Zero(6, 2);
  m.col(0).setOnes();
  m.col(1).setOnes();
  EXPECT_THROW(maxvol(m), RankDeficient);
}

TEST(SolveSmall, IdentityAndDiagonal) {
  std::mt19937_64 rng(5);
  Matrix b = random_matrix(3, 2, rng);
  EXPECT_LE((solve_small(Matrix::Identity(3, 3), b).x - b).norm(), 0.0);
  Matrix a = Matrix::Zero(2, 2);
  a.diagonal() << 2, 4;
  Matrix r(2, 1);
  r << 2, 8;
  auto s = solve_small(a, r);
  EXPECT_DOUBLE_EQ(s.x(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(s.x(1, 0), 2.0);
  EXPECT_FALSE(s.ill_conditioned);
}

TEST(SolveSmall, RandomSpdResidual) {
  std::mt19937_64 rng(7);
  Matrix g = random_matrix(30, 30, rng);
  Matrix a = g * g.transpose() + 30.0 * Matrix::Identity(30, 30);
  Matrix b = random_matrix(30, 4, rng);
  auto s = solve_small(a, b);
  EXPECT_LE((a * s.x - b).norm(), 1e-10 * b.norm());
}

TEST(SolveSmall, SingularAndIllConditioned) {
  EXPECT_THROW(solve_small(Matrix::Zero(2, 2), Matrix::Ones(2, 1)), SingularMatrix);
  Matrix a(2, 2);
  a << 1, 1, 1, 1 + 1e-16 * 4;
  try {
    auto s = solve_small(a, Matrix::Ones(2, 1));
    EXPECT_TRUE(s.ill_conditioned);
  } catch (const SingularMatrix&) {
    SUCCEED();
  }
}

TEST(SymTridiag, SmallCases) {
  std::vector<double> d1{2.5};
  auto e1 = symtridiag_eig(d1, {});
  EXPECT_DOUBLE_EQ(e1.values[0], 2.5);
  std::vector<double> d2{0, 0}, o2{1};
  auto e2 = symtridiag_eig(d2, o2);
  EXPECT_NEAR(e2.values[0], -1.0, 1e-15);
  EXPECT_NEAR(e2.values[1], 1.0, 1e-15);
}

TEST(SymTridiag, HermiteJacobiMatrix) {
  std::vector<double> d(3, 0.0), o{1.0, std::sqrt(2.0)};
  auto e = symtridiag_eig(d, o);
  EXPECT_NEAR(e.values[0], -std::sqrt(3.0), 1e-14);
  EXPECT_NEAR(e.values[1], 0.0, 1e-14);
  EXPECT_NEAR(e.values[2], std::sqrt(3.0), 1e-14);
}

TEST(SymTridiag, Reconstruction) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  const int n = 12;
  std::vector<double> d(n), o(n - 1);
  for (auto& x : d) x = nd(rng);
  for (auto& x : o) x = nd(rng);
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) t(i, i) = d[i];
  for (int i = 0; i + 1 < n; ++i) t(i, i + 1) = t(i + 1, i) = o[i];
  auto e = symtridiag_eig(d, o);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(t);
  for (int i = 0; i < n; ++i) {
    EXPECT_NEAR(e.values[i], ref.eigenvalues()[i], 1e-12);
    Eigen::VectorXd v = ref.eigenvectors().col(i);
    EXPECT_LE((t * v - e.values[i] * v).norm(), 1e-12);
    EXPECT_NEAR(std::abs(e.first_components[i]), std::abs(v[0]), 1e-12);
  }
  EXPECT_THROW(symtridiag_eig(d, std::vector<double>(3)), InvalidInput);
}
