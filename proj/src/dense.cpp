// SPDX-License-Identifier: Apache-2.0
#include "ttuq/dense.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <limits>

namespace ttuq::dense {

bool all_finite(const MatrixRef& m) { return m.allFinite(); }

QrResult qr_thin(const MatrixRef& m) {
  if (m.rows() < 1 || m.cols() < 1) throw InvalidInput("qr_thin: empty matrix");
  if (!m.allFinite()) throw InvalidInput("qr_thin: non-finite entry");
  const Index n = m.rows();
  const Index k = std::min(n, m.cols());
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  QrResult out;
  out.q = qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
  out.r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  return out;
}

SvdResult svd_truncate(const MatrixRef& m, double rel_tol, Index rank_cap) {
  if (!(rel_tol >= 0.0 && rel_tol < 1.0)) throw InvalidInput("svd_truncate: rel_tol must lie in [0,1)");
  if (!m.allFinite()) throw InvalidInput("svd_truncate: non-finite entry");
  SvdResult out;
  const double fro = m.norm();
  if (m.size() == 0 || fro == 0.0) {
    out.u.resize(m.rows(), 0);
    out.s.resize(0);
    out.vt.resize(0, m.cols());
    return out;
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const Index p = s.size();
  // tail[r] = sum_{i >= r} s_i^2
  std::vector<double> tail(p + 1, 0.0);
  for (Index i = p - 1; i >= 0; --i) tail[i] = tail[i + 1] + s[i] * s[i];
  const double bound = rel_tol * fro;
  Index r = p;
  for (Index i = 0; i <= p; ++i) {
    if (std::sqrt(tail[i]) <= bound) {
      r = i;
      break;
    }
  }
  while (r > 0 && s[r - 1] <= 0.0) --r;
  if (rank_cap >= 1) r = std::min(r, rank_cap);
  r = std::max<Index>(r, 1);
  out.rank = r;
  out.u = svd.matrixU().leftCols(r);
  out.s = s.head(r);
  out.vt = svd.matrixV().leftCols(r).transpose();
  return out;
}

Matrix select_rows(const MatrixRef& m, const PivotSet& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

namespace {

// Row pivots of Gaussian elimination with partial pivoting on a tall matrix.
PivotSet lu_start(const MatrixRef& m) {
  const Index n = m.rows(), r = m.cols();
  Matrix w = m;
  std::vector<Index> perm(n);
  for (Index i = 0; i < n; ++i) perm[i] = i;
  const double scale = m.cwiseAbs().maxCoeff();
  for (Index j = 0; j < r; ++j) {
    Index best = j;
    double bv = -1.0;
    for (Index i = j; i < n; ++i) {
      const double v = std::abs(w(perm[i], j));
      if (v > bv) {
        bv = v;
        best = i;
      }
    }
    if (!(bv > 1e-13 * scale)) {
      throw RankDeficient("maxvol: matrix is numerically rank deficient at column " + std::to_string(j) +
                          "; truncate before pivoting");
    }
    std::swap(perm[j], perm[best]);
    const Index pr = perm[j];
    for (Index i = j + 1; i < n; ++i) {
      const Index row = perm[i];
      const double f = w(row, j) / w(pr, j);
      if (f != 0.0) w.row(row).tail(r - j) -= f * w.row(pr).tail(r - j);
    }
  }
  return PivotSet(perm.begin(), perm.begin() + r);
}

}  // namespace

PivotSet maxvol(const MatrixRef& m, const MaxvolOptions& opts) {
  const Index n = m.rows(), r = m.cols();
  if (r < 1 || n < r) throw InvalidInput("maxvol: need rows >= cols >= 1");
  if (!m.allFinite()) throw InvalidInput("maxvol: non-finite entry");
  PivotSet piv = lu_start(m);
  if (n == r) return piv;

  Eigen::MatrixXd sub = select_rows(m, piv);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(sub.transpose());
  if (!(std::abs(lu.determinant()) > 0.0) || lu.rcond() < 1e-14) {
    throw RankDeficient("maxvol: singular starting submatrix; truncate before pivoting");
  }
  // B = M * sub^{-1}
  Eigen::MatrixXd b = lu.solve(Eigen::MatrixXd(m.transpose())).transpose();

  const double limit = 1.0 + opts.dominance_tol;
  for (int it = 0; it < opts.max_iters; ++it) {
    Index i = 0, j = 0;
    const double big = b.cwiseAbs().maxCoeff(&i, &j);
    if (big <= limit) break;
    const Eigen::VectorXd col = b.col(j);
    Eigen::RowVectorXd row = b.row(i);
    row(j) -= 1.0;
    b.noalias() -= col * (row / b(i, j));
    piv[j] = i;
  }
  Eigen::MatrixXd fin = select_rows(m, piv);
  Eigen::PartialPivLU<Eigen::MatrixXd> chk(fin);
  if (!(chk.rcond() > 1e-15)) throw RankDeficient("maxvol: pivot submatrix became singular; truncate first");
  return piv;
}

SmallSolve solve_small(const MatrixRef& a, const MatrixRef& b) {
  if (a.rows() != a.cols()) throw InvalidInput("solve_small: matrix not square");
  if (b.rows() != a.rows()) throw InvalidInput("solve_small: rhs row count mismatch");
  if (!a.allFinite() || !b.allFinite()) throw InvalidInput("solve_small: non-finite entry");
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const auto& f = lu.matrixLU();
  for (Index i = 0; i < f.rows(); ++i) {
    if (f(i, i) == 0.0) throw SingularMatrix("solve_small: exactly singular matrix");
  }
  SmallSolve out;
  out.x = lu.solve(Eigen::MatrixXd(b));
  out.rcond = lu.rcond();
  out.ill_conditioned = out.rcond < 1e-14;
  return out;
}

TridiagEig symtridiag_eig(std::span<const double> diag, std::span<const double> offdiag) {
  const Index n = static_cast<Index>(diag.size());
  if (n < 1) throw InvalidInput("symtridiag_eig: empty diagonal");
  if (static_cast<Index>(offdiag.size()) != n - 1) throw InvalidInput("symtridiag_eig: offdiag length must be n-1");
  Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(diag.data(), n);
  Eigen::VectorXd e(std::max<Index>(n - 1, 0));
  for (Index i = 0; i + 1 < n; ++i) e[i] = offdiag[i];
  if (!d.allFinite() || !e.allFinite()) throw InvalidInput("symtridiag_eig: non-finite entry");
  TridiagEig out;
  if (n == 1) {
    out.values = d;
    out.first_components = Eigen::VectorXd::Ones(1);
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw InvalidInput("symtridiag_eig: eigensolver failed");
  out.values = es.eigenvalues();
  out.first_components = es.eigenvectors().row(0).transpose();
  return out;
}

}  // namespace ttuq::dense
